#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace itoo {

/// Two-level fashion taxonomy: super-categories and the sub-categories under each.
///
/// Entries are kept as raw (sub, super) rows so that malformed taxonomies loaded from
/// disk can still be represented and reported by validate_hierarchy().
class CategoryHierarchy {
public:
    struct Entry {
        std::string sub;
        std::string super;
    };

    CategoryHierarchy() = default;
    CategoryHierarchy(std::vector<std::string> supers, std::vector<Entry> entries);

    /// The shipped taxonomy: 6 super-categories, 32 sub-categories.
    static const CategoryHierarchy& default_hierarchy();

    /// Reads `sub<TAB>super` lines. Super order follows first appearance.
    static CategoryHierarchy load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    const std::vector<std::string>& super_categories() const { return supers_; }
    const std::vector<Entry>& entries() const { return entries_; }

    std::optional<std::string> super_of(const std::string& sub) const;
    std::vector<std::string> subs_of(const std::string& super) const;
    bool has_sub(const std::string& sub) const { return super_of(sub).has_value(); }
    bool has_super(const std::string& super) const;

    /// Like super_of but throws ContractError for unknown sub-categories.
    const std::string& require_super(const std::string& sub) const;

private:
    std::vector<std::string> supers_;
    std::vector<Entry> entries_;
};

/// Expected number of sub-categories per super-category, in default super order.
inline const std::vector<std::pair<std::string, std::size_t>>& expected_sub_counts() {
    static const std::vector<std::pair<std::string, std::size_t>> counts = {
        {"top", 6}, {"bottom", 6}, {"outer", 6}, {"dress", 2}, {"shoes", 7}, {"bag", 5}};
    return counts;
}

/// Empty result iff the hierarchy has the 6/32 shape with unique names and mappings.
std::vector<std::string> validate_hierarchy(const CategoryHierarchy& h);

}  // namespace itoo
