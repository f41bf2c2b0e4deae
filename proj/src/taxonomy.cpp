#include "skillforge/taxonomy.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "skillforge/errors.hpp"

namespace skillforge::taxonomy {

std::string relatedness_to_string(Relatedness r) {
    switch (r) {
        case Relatedness::identical: return "identical";
        case Relatedness::ancestor: return "ancestor";
        case Relatedness::descendant: return "descendant";
        case Relatedness::sibling: return "sibling";
        case Relatedness::unrelated: return "unrelated";
    }
    return "unrelated";
}

void Taxonomy::add_entry(TaxonomyEntry entry) {
    if (entry.id.empty()) throw ParseError("taxonomy entry with empty id");
    if (entry.preferred_label.empty())
        throw ParseError("taxonomy entry '" + entry.id + "' has empty preferred label");
    if (index_.count(entry.id)) throw ParseError("duplicate taxonomy id '" + entry.id + "'");
    index_[entry.id] = entries_.size();
    entries_.push_back(std::move(entry));
}

void Taxonomy::finalize() {
    for (const auto& e : entries_) {
        for (const auto& b : e.broader_ids) {
            if (!index_.count(b))
                throw ParseError("entry '" + e.id + "' references unknown broader id '" + b + "'");
        }
    }
    // broader edges must form a DAG
    std::vector<int> state(entries_.size(), 0);  // 0 unseen, 1 on stack, 2 done
    std::vector<std::size_t> stack;
    for (std::size_t root = 0; root < entries_.size(); ++root) {
        if (state[root] != 0) continue;
        stack.push_back(root);
        std::vector<std::size_t> iter_pos(entries_.size(), 0);
        state[root] = 1;
        while (!stack.empty()) {
            std::size_t v = stack.back();
            const auto& broader = entries_[v].broader_ids;
            if (iter_pos[v] < broader.size()) {
                std::size_t w = index_.at(broader[iter_pos[v]++]);
                if (state[w] == 1)
                    throw ParseError("cycle in broader relations at '" + entries_[w].id + "'");
                if (state[w] == 0) {
                    state[w] = 1;
                    stack.push_back(w);
                }
            } else {
                state[v] = 2;
                stack.pop_back();
            }
        }
    }
}

const TaxonomyEntry& Taxonomy::entry(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw ParseError("unknown taxonomy id '" + id + "'");
    return entries_[it->second];
}

bool Taxonomy::reachable_upward(std::size_t from, std::size_t target) const {
    std::vector<std::size_t> frontier{from};
    std::set<std::size_t> seen{from};
    while (!frontier.empty()) {
        std::size_t v = frontier.back();
        frontier.pop_back();
        for (const auto& b : entries_[v].broader_ids) {
            std::size_t w = index_.at(b);
            if (w == target) return true;
            if (seen.insert(w).second) frontier.push_back(w);
        }
    }
    return false;
}

Relatedness Taxonomy::relatedness(const std::string& id, const std::string& other) const {
    auto a = index_.find(id);
    auto b = index_.find(other);
    if (a == index_.end()) throw ParseError("unknown taxonomy id '" + id + "'");
    if (b == index_.end()) throw ParseError("unknown taxonomy id '" + other + "'");
    if (a->second == b->second) return Relatedness::identical;
    if (reachable_upward(a->second, b->second)) return Relatedness::ancestor;
    if (reachable_upward(b->second, a->second)) return Relatedness::descendant;
    const auto& pa = entries_[a->second].broader_ids;
    const auto& pb = entries_[b->second].broader_ids;
    for (const auto& p : pa)
        if (std::find(pb.begin(), pb.end(), p) != pb.end()) return Relatedness::sibling;
    return Relatedness::unrelated;
}

std::vector<std::vector<std::string>> read_csv(std::istream& in) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string cell;
    bool in_quotes = false;
    bool row_dirty = false;
    char c;
    while (in.get(c)) {
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    cell += '"';
                } else {
                    in_quotes = false;
                }
            } else {
                cell += c;
            }
            continue;
        }
        switch (c) {
            case '"': in_quotes = true; row_dirty = true; break;
            case ',':
                row.push_back(std::move(cell));
                cell.clear();
                row_dirty = true;
                break;
            case '\r': break;
            case '\n':
                if (row_dirty || !cell.empty()) {
                    row.push_back(std::move(cell));
                    cell.clear();
                    rows.push_back(std::move(row));
                    row.clear();
                    row_dirty = false;
                }
                break;
            default: cell += c; row_dirty = true; break;
        }
    }
    if (row_dirty || !cell.empty()) {
        row.push_back(std::move(cell));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string csv_escape(const std::string& cell) {
    if (cell.find_first_of(",\"\n\r") == std::string::npos) return cell;
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

namespace {

std::size_t require_column(const std::vector<std::string>& header, const std::string& name,
                           const std::string& file_kind) {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw ParseError(file_kind + " file is missing column '" + name + "'", 1);
}

std::vector<std::string> split_lines(const std::string& cell) {
    std::vector<std::string> out;
    std::stringstream ss(cell);
    std::string line;
    while (std::getline(ss, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) out.push_back(line);
    }
    return out;
}

}  // namespace

Taxonomy parse_taxonomy(std::istream& skills_csv, std::istream& relations_csv) {
    auto skill_rows = read_csv(skills_csv);
    if (skill_rows.empty()) throw ParseError("skills file is empty");
    const auto& header = skill_rows[0];
    std::size_t col_uri = require_column(header, "conceptUri", "skills");
    std::size_t col_label = require_column(header, "preferredLabel", "skills");
    std::size_t col_alt = require_column(header, "altLabels", "skills");
    std::size_t col_desc = require_column(header, "description", "skills");

    std::vector<TaxonomyEntry> parsed;
    std::unordered_map<std::string, std::size_t> by_id;
    for (std::size_t r = 1; r < skill_rows.size(); ++r) {
        const auto& row = skill_rows[r];
        if (row.size() <= std::max({col_uri, col_label, col_alt, col_desc}))
            throw ParseError("skills row " + std::to_string(r + 1) + " has too few cells");
        TaxonomyEntry e;
        e.id = row[col_uri];
        e.preferred_label = row[col_label];
        e.alt_labels = split_lines(row[col_alt]);
        e.description = row[col_desc];
        if (by_id.count(e.id))
            throw ParseError("duplicate taxonomy id '" + e.id + "' (skills row " +
                             std::to_string(r + 1) + ")");
        by_id[e.id] = parsed.size();
        parsed.push_back(std::move(e));
    }

    auto rel_rows = read_csv(relations_csv);
    if (rel_rows.empty()) throw ParseError("relations file is empty");
    std::size_t col_child = require_column(rel_rows[0], "conceptUri", "relations");
    std::size_t col_parent = require_column(rel_rows[0], "broaderUri", "relations");
    for (std::size_t r = 1; r < rel_rows.size(); ++r) {
        const auto& row = rel_rows[r];
        if (row.size() <= std::max(col_child, col_parent))
            throw ParseError("relations row " + std::to_string(r + 1) + " has too few cells");
        const std::string& child = row[col_child];
        const std::string& parent = row[col_parent];
        auto it = by_id.find(child);
        if (it == by_id.end())
            throw ParseError("relations row " + std::to_string(r + 1) + " references unknown id '" +
                             child + "'");
        if (!by_id.count(parent))
            throw ParseError("relations row " + std::to_string(r + 1) + " references unknown id '" +
                             parent + "'");
        auto& broader = parsed[it->second].broader_ids;
        if (std::find(broader.begin(), broader.end(), parent) == broader.end())
            broader.push_back(parent);
    }

    Taxonomy taxonomy;
    for (auto& e : parsed) taxonomy.add_entry(std::move(e));
    taxonomy.finalize();
    return taxonomy;
}

Taxonomy load_taxonomy(const std::string& skills_path, const std::string& relations_path) {
    std::ifstream skills(skills_path, std::ios::binary);
    if (!skills) throw ParseError("cannot open skills file: " + skills_path);
    std::ifstream relations(relations_path, std::ios::binary);
    if (!relations) throw ParseError("cannot open relations file: " + relations_path);
    return parse_taxonomy(skills, relations);
}

void save_taxonomy_csv(const Taxonomy& taxonomy, const std::string& skills_path,
                       const std::string& relations_path) {
    std::ofstream skills(skills_path, std::ios::binary);
    if (!skills) throw ParseError("cannot write skills file: " + skills_path);
    skills << "conceptUri,preferredLabel,altLabels,description\n";
    for (const auto& e : taxonomy.entries()) {
        std::string alts;
        for (std::size_t i = 0; i < e.alt_labels.size(); ++i) {
            if (i > 0) alts += '\n';
            alts += e.alt_labels[i];
        }
        skills << csv_escape(e.id) << ',' << csv_escape(e.preferred_label) << ','
               << csv_escape(alts) << ',' << csv_escape(e.description) << '\n';
    }
    std::ofstream relations(relations_path, std::ios::binary);
    if (!relations) throw ParseError("cannot write relations file: " + relations_path);
    relations << "conceptUri,broaderUri\n";
    for (const auto& e : taxonomy.entries())
        for (const auto& b : e.broader_ids)
            relations << csv_escape(e.id) << ',' << csv_escape(b) << '\n';
}

std::string render_passage(const TaxonomyEntry& entry, PassageMode mode) {
    if (mode == PassageMode::label || entry.description.empty()) return entry.preferred_label;
    return entry.preferred_label + " — " + entry.description;
}

std::string taxonomy_to_jsonl(const Taxonomy& taxonomy) {
    std::string out;
    for (const auto& e : taxonomy.entries()) {
        nlohmann::json j;
        j["id"] = e.id;
        j["preferred_label"] = e.preferred_label;
        j["alt_labels"] = e.alt_labels;
        j["description"] = e.description;
        j["broader_ids"] = e.broader_ids;
        out += j.dump() + "\n";
    }
    return out;
}

}  // namespace skillforge::taxonomy
