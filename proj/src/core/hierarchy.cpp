#include "itoo/core/hierarchy.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "itoo/core/errors.hpp"

namespace itoo {

CategoryHierarchy::CategoryHierarchy(std::vector<std::string> supers, std::vector<Entry> entries)
    : supers_(std::move(supers)), entries_(std::move(entries)) {}

const CategoryHierarchy& CategoryHierarchy::default_hierarchy() {
    static const CategoryHierarchy h = [] {
        std::vector<std::string> supers = {"top", "bottom", "outer", "dress", "shoes", "bag"};
        const std::vector<std::pair<std::string, std::vector<std::string>>> groups = {
            {"top", {"t-shirt", "shirt", "blouse", "knit", "sweatshirt", "hoodie"}},
            {"bottom", {"jeans", "slacks", "skirt", "shorts", "leggings", "jogger-pants"}},
            {"outer", {"coat", "jacket", "padded-jacket", "cardigan", "vest", "blazer"}},
            {"dress", {"dress", "jumpsuit"}},
            {"shoes", {"sneakers", "loafers", "heels", "boots", "sandals", "slippers", "flats"}},
            {"bag", {"tote", "shoulder-bag", "backpack", "clutch", "crossbody"}},
        };
        std::vector<Entry> entries;
        for (const auto& [super, subs] : groups) {
            for (const auto& sub : subs) entries.push_back({sub, super});
        }
        return CategoryHierarchy(std::move(supers), std::move(entries));
    }();
    return h;
}

CategoryHierarchy CategoryHierarchy::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open hierarchy file " + path.string());
    std::vector<std::string> supers;
    std::vector<Entry> entries;
    std::string line;
    std::uint64_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 == line.size() ||
            line.find('\t', tab + 1) != std::string::npos) {
            throw ParseError("hierarchy: expected sub<TAB>super", lineno);
        }
        Entry e{line.substr(0, tab), line.substr(tab + 1)};
        if (std::find(supers.begin(), supers.end(), e.super) == supers.end()) supers.push_back(e.super);
        entries.push_back(std::move(e));
    }
    return CategoryHierarchy(std::move(supers), std::move(entries));
}

void CategoryHierarchy::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write hierarchy file " + path.string());
    for (const auto& e : entries_) out << e.sub << '\t' << e.super << '\n';
}

std::optional<std::string> CategoryHierarchy::super_of(const std::string& sub) const {
    for (const auto& e : entries_) {
        if (e.sub == sub) return e.super;
    }
    return std::nullopt;
}

std::vector<std::string> CategoryHierarchy::subs_of(const std::string& super) const {
    std::vector<std::string> out;
    for (const auto& e : entries_) {
        if (e.super == super) out.push_back(e.sub);
    }
    return out;
}

bool CategoryHierarchy::has_super(const std::string& super) const {
    return std::find(supers_.begin(), supers_.end(), super) != supers_.end();
}

const std::string& CategoryHierarchy::require_super(const std::string& sub) const {
    for (const auto& e : entries_) {
        if (e.sub == sub) return e.super;
    }
    throw ContractError("unknown sub-category '" + sub + "'");
}

std::vector<std::string> validate_hierarchy(const CategoryHierarchy& h) {
    std::vector<std::string> violations;
    const auto& supers = h.super_categories();
    const auto& expected = expected_sub_counts();

    if (std::set<std::string>(supers.begin(), supers.end()).size() != supers.size()) {
        violations.push_back("duplicate super-category name");
    }
    if (supers.size() != expected.size()) {
        violations.push_back("super-category count: expected 6, got " + std::to_string(supers.size()));
    }
    if (h.entries().size() != 32) {
        violations.push_back("sub-category count: expected 32, got " + std::to_string(h.entries().size()));
    }

    std::map<std::string, std::set<std::string>> supers_per_sub;
    std::map<std::string, std::size_t> rows_per_sub;
    for (const auto& e : h.entries()) {
        supers_per_sub[e.sub].insert(e.super);
        ++rows_per_sub[e.sub];
        if (!h.has_super(e.super)) {
            violations.push_back("unknown super-category '" + e.super + "' for sub '" + e.sub + "'");
        }
    }
    for (const auto& [sub, ss] : supers_per_sub) {
        if (ss.size() > 1) {
            violations.push_back("non-unique mapping: sub '" + sub + "' maps to " +
                                 std::to_string(ss.size()) + " super-categories");
        } else if (rows_per_sub[sub] > 1) {
            violations.push_back("duplicate sub-category name '" + sub + "'");
        }
    }

    for (const auto& [super, count] : expected) {
        if (!h.has_super(super)) {
            violations.push_back("missing super-category '" + super + "'");
            continue;
        }
        const auto got = h.subs_of(super).size();
        if (got != count) {
            violations.push_back("per-super count for '" + super + "': expected " +
                                 std::to_string(count) + ", got " + std::to_string(got));
        }
    }
    return violations;
}

}  // namespace itoo
