#pragma once

#include <string>

namespace skillforge::assets {

// Prompt templates live as UTF-8 files under the asset directory, resolved
// from $SKILLFORGE_ASSETS, then the build-time default, then ./assets.
std::string asset_dir();
std::string asset_path(const std::string& name);
std::string load_asset(const std::string& name);

inline constexpr const char* kIdentifyPrompt = "prompts/identify.txt";
inline constexpr const char* kRerankPrompt = "prompts/rerank.txt";
inline constexpr const char* kRerankReasonPrompt = "prompts/rerank_reason.txt";
inline constexpr const char* kRerankCausalPrompt = "prompts/rerank_causal.txt";

}  // namespace skillforge::assets
