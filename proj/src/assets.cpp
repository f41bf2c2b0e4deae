#include "skillforge/assets.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "skillforge/errors.hpp"

#ifndef SKILLFORGE_ASSET_DIR
#define SKILLFORGE_ASSET_DIR "assets"
#endif

namespace fs = std::filesystem;

namespace skillforge::assets {

std::string asset_dir() {
    if (const char* env = std::getenv("SKILLFORGE_ASSETS")) return env;
    if (fs::exists(SKILLFORGE_ASSET_DIR)) return SKILLFORGE_ASSET_DIR;
    return "assets";
}

std::string asset_path(const std::string& name) {
    return (fs::path(asset_dir()) / name).string();
}

std::string load_asset(const std::string& name) {
    std::string path = asset_path(name);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("missing asset file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace skillforge::assets
