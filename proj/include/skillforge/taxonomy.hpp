#pragma once

#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

namespace skillforge::taxonomy {

struct TaxonomyEntry {
    std::string id;  // concept URI
    std::string preferred_label;
    std::vector<std::string> alt_labels;
    std::string description;
    std::vector<std::string> broader_ids;
};

enum class Relatedness { identical, ancestor, descendant, sibling, unrelated };

std::string relatedness_to_string(Relatedness r);

class Taxonomy {
public:
    void add_entry(TaxonomyEntry entry);
    // Wires broader edges and rejects dangling references and cycles.
    void finalize();

    bool contains(const std::string& id) const { return index_.count(id) != 0; }
    const TaxonomyEntry& entry(const std::string& id) const;
    const std::vector<TaxonomyEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

    // Relation of `other` as seen from `id`: ancestor means `other` lies on a
    // broader path above `id`; sibling means a shared direct parent.
    Relatedness relatedness(const std::string& id, const std::string& other) const;

private:
    std::vector<TaxonomyEntry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
    bool reachable_upward(std::size_t from, std::size_t target) const;
};

// CSV schemas: skills file `conceptUri,preferredLabel,altLabels,description`
// (altLabels newline-separated inside the cell), relations file
// `conceptUri,broaderUri`. Throws ParseError naming the offending row.
Taxonomy load_taxonomy(const std::string& skills_path, const std::string& relations_path);
Taxonomy parse_taxonomy(std::istream& skills_csv, std::istream& relations_csv);

void save_taxonomy_csv(const Taxonomy& taxonomy, const std::string& skills_path,
                       const std::string& relations_path);

enum class PassageMode { label, label_description };

// Text a taxonomy entry contributes to retrieval and rerank prompts.
std::string render_passage(const TaxonomyEntry& entry, PassageMode mode);

std::string taxonomy_to_jsonl(const Taxonomy& taxonomy);

// Minimal RFC-4180 reader, shared with fixtures. Handles quoted cells with
// embedded separators and newlines.
std::vector<std::vector<std::string>> read_csv(std::istream& in);
std::string csv_escape(const std::string& cell);

}  // namespace skillforge::taxonomy
