#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "tnfcm/binary_io.hpp"
#include "tnfcm/common.hpp"
#include "tnfcm/random.hpp"

namespace tnfcm {

inline constexpr const char kItemsFile[] = "items.jsonl";
inline constexpr const char kPairsFile[] = "pairs.tsv";
inline constexpr const char kFeatureExtension[] = ".tnfc";
inline constexpr std::uint32_t kFeatureFormatVersion = 1;

enum class Split { train = 0, validation = 1, test = 2 };

inline constexpr std::array<Split, 3> kAllSplits{Split::train, Split::validation, Split::test};

inline std::string_view split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::validation: return "val";
        case Split::test: return "test";
    }
    return "?";
}

inline std::optional<Split> parse_split(std::string_view s) {
    if (s == "train") return Split::train;
    if (s == "val" || s == "validation") return Split::validation;
    if (s == "test") return Split::test;
    return std::nullopt;
}

struct Item {
    std::string item_id;
    std::string category_id;
    std::map<std::string, std::size_t> feature_row;  // modality -> row index
};

/// Raw per-modality features; one row of `dim` floats per indexed item.
struct FeatureTable {
    std::string modality;
    std::size_t dim = 0;
    std::vector<float> values;

    std::size_t rows() const noexcept { return dim == 0 ? 0 : values.size() / dim; }
    std::span<const float> row(std::size_t r) const noexcept { return {values.data() + r * dim, dim}; }
};

/// Positive pair expressed as item indices into a Corpus.
struct ItemPair {
    std::size_t head = 0;
    std::size_t tail = 0;

    auto operator<=>(const ItemPair&) const = default;
};

/// Pair record as read from a pairs file, before id resolution.
struct PairRecord {
    std::string head_id;
    std::string tail_id;
    Split split = Split::train;
    std::size_t line = 0;  // 1-based source line, 0 when synthesized in memory
};

struct PairSet {
    Split split = Split::train;
    std::vector<ItemPair> pairs;
};

/// Unordered co-occurrence set over item indices with O(1) expected lookup.
class PositiveSet {
public:
    PositiveSet() = default;

    template <typename Range>
    explicit PositiveSet(const Range& pairs) {
        for (const auto& p : pairs) add(p.head, p.tail);
    }

    void add(std::size_t a, std::size_t b) { keys_.insert(key(a, b)); }
    bool contains(std::size_t a, std::size_t b) const { return keys_.contains(key(a, b)); }
    std::size_t size() const noexcept { return keys_.size(); }

private:
    static std::uint64_t key(std::size_t a, std::size_t b) {
        if (a > b) std::swap(a, b);
        return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
    }
    std::unordered_set<std::uint64_t> keys_;
};

/// Validated, immutable collection of items, features and positive pairs.
/// Safe for concurrent reads once constructed.
class Corpus {
public:
    /// Validates every invariant and resolves ids; throws ValidationError.
    /// The source names prefix error messages as `file:line`.
    static Corpus build(std::vector<Item> items, std::map<std::string, FeatureTable> tables,
                        const std::vector<PairRecord>& pairs, const std::string& items_source = kItemsFile,
                        const std::string& pairs_source = kPairsFile);

    std::size_t num_items() const noexcept { return items_.size(); }
    const std::vector<Item>& items() const noexcept { return items_; }
    const Item& item(std::size_t i) const { return items_.at(i); }

    std::optional<std::size_t> index_of(std::string_view item_id) const {
        auto it = id_index_.find(std::string(item_id));
        if (it == id_index_.end()) return std::nullopt;
        return it->second;
    }

    /// Sorted category registry.
    const std::vector<std::string>& categories() const noexcept { return categories_; }
    std::size_t category_of(std::size_t item) const { return item_category_.at(item); }
    const std::string& category_name(std::size_t category) const { return categories_.at(category); }
    std::optional<std::size_t> category_index(std::string_view name) const {
        auto it = std::lower_bound(categories_.begin(), categories_.end(), name);
        if (it == categories_.end() || *it != name) return std::nullopt;
        return static_cast<std::size_t>(it - categories_.begin());
    }
    const std::vector<std::size_t>& items_in_category(std::size_t category) const {
        return by_category_.at(category);
    }

    /// Sorted modality names.
    std::vector<std::string> modalities() const {
        std::vector<std::string> out;
        for (const auto& [name, _] : tables_) out.push_back(name);
        return out;
    }
    bool has_modality(const std::string& m) const { return tables_.contains(m); }
    const FeatureTable& table(const std::string& modality) const {
        auto it = tables_.find(modality);
        if (it == tables_.end()) throw ValidationError("corpus has no modality '" + modality + "'");
        return it->second;
    }
    std::span<const float> features(std::size_t item, const std::string& modality) const {
        const FeatureTable& t = table(modality);
        return t.row(items_.at(item).feature_row.at(modality));
    }

    const PairSet& pairs(Split s) const { return splits_[static_cast<std::size_t>(s)]; }

    /// Every positive pair over all splits (co-occurrence, unordered).
    const PositiveSet& all_positives() const noexcept { return all_positives_; }

    const std::vector<std::string>& warnings() const noexcept { return warnings_; }

private:
    std::vector<Item> items_;
    std::unordered_map<std::string, std::size_t> id_index_;
    std::vector<std::string> categories_;
    std::vector<std::size_t> item_category_;
    std::vector<std::vector<std::size_t>> by_category_;
    std::map<std::string, FeatureTable> tables_;
    std::array<PairSet, 3> splits_{PairSet{Split::train, {}}, PairSet{Split::validation, {}},
                                   PairSet{Split::test, {}}};
    PositiveSet all_positives_;
    std::vector<std::string> warnings_;
};

inline Corpus Corpus::build(std::vector<Item> items, std::map<std::string, FeatureTable> tables,
                            const std::vector<PairRecord>& pairs, const std::string& items_source,
                            const std::string& pairs_source) {
    Corpus c;
    c.items_ = std::move(items);
    c.tables_ = std::move(tables);

    for (const auto& [name, table] : c.tables_) {
        if (table.dim == 0) throw ValidationError("feature table '" + name + "' has zero dimension");
        if (table.values.size() % table.dim != 0)
            throw ValidationError("feature table '" + name + "': value count is not a multiple of dim");
        for (std::size_t i = 0; i < table.values.size(); ++i) {
            if (!std::isfinite(table.values[i]))
                throw ValidationError(detail::concat("feature table '", name, "': non-finite value at row ",
                                                     i / table.dim, ", column ", i % table.dim));
        }
    }

    std::vector<std::string> cats;
    for (std::size_t i = 0; i < c.items_.size(); ++i) {
        const Item& it = c.items_[i];
        const std::string where = detail::concat(items_source, ":", i + 1);
        if (it.item_id.empty()) throw ValidationError(where + ": empty item_id");
        if (it.category_id.empty()) throw ValidationError(where + ": empty category_id for item \"" + it.item_id + "\"");
        if (!c.id_index_.emplace(it.item_id, i).second)
            throw ValidationError(where + ": duplicate item_id \"" + it.item_id + "\"");
        if (it.feature_row.size() != c.tables_.size())
            throw ValidationError(where + ": item \"" + it.item_id + "\" must reference every modality (" +
                                  std::to_string(c.tables_.size()) + " declared)");
        for (const auto& [modality, row] : it.feature_row) {
            auto t = c.tables_.find(modality);
            if (t == c.tables_.end())
                throw ValidationError(where + ": item \"" + it.item_id + "\" references unknown modality '" +
                                      modality + "'");
            if (row >= t->second.rows())
                throw ValidationError(detail::concat(where, ": item \"", it.item_id, "\" row ", row,
                                                     " out of bounds for modality '", modality, "' (",
                                                     t->second.rows(), " rows)"));
        }
        cats.push_back(it.category_id);
    }
    std::sort(cats.begin(), cats.end());
    cats.erase(std::unique(cats.begin(), cats.end()), cats.end());
    c.categories_ = std::move(cats);
    c.by_category_.assign(c.categories_.size(), {});
    c.item_category_.reserve(c.items_.size());
    for (std::size_t i = 0; i < c.items_.size(); ++i) {
        std::size_t cat = *c.category_index(c.items_[i].category_id);
        c.item_category_.push_back(cat);
        c.by_category_[cat].push_back(i);
    }

    std::array<std::set<ItemPair>, 3> seen;
    for (const PairRecord& p : pairs) {
        const std::string where = detail::concat(pairs_source, ":", p.line);
        auto h = c.index_of(p.head_id);
        if (!h) throw ValidationError(where + ": unknown item_id \"" + p.head_id + "\"");
        auto t = c.index_of(p.tail_id);
        if (!t) throw ValidationError(where + ": unknown item_id \"" + p.tail_id + "\"");
        if (c.item_category_[*h] == c.item_category_[*t])
            throw ValidationError(where + ": pair (\"" + p.head_id + "\", \"" + p.tail_id +
                                  "\") joins items of the same category \"" + c.items_[*h].category_id + "\"");
        const ItemPair ip{*h, *t};
        auto& bucket = seen[static_cast<std::size_t>(p.split)];
        if (!bucket.insert(ip).second) {
            c.warnings_.push_back(where + ": duplicate pair (\"" + p.head_id + "\", \"" + p.tail_id +
                                  "\") in split " + std::string(split_name(p.split)) + " dropped");
            continue;
        }
        for (Split other : kAllSplits) {
            if (other == p.split) continue;
            if (seen[static_cast<std::size_t>(other)].contains(ip))
                throw ValidationError(where + ": pair (\"" + p.head_id + "\", \"" + p.tail_id +
                                      "\") appears in both " + std::string(split_name(other)) + " and " +
                                      std::string(split_name(p.split)));
        }
        c.splits_[static_cast<std::size_t>(p.split)].pairs.push_back(ip);
        c.all_positives_.add(ip.head, ip.tail);
    }
    for (const auto& w : c.warnings_) log(LogLevel::warning, w);
    return c;
}

// ---------------------------------------------------------------------------
// File formats

/// Feature file: "TNFC", u32 version, u64 rows, u32 dim, then rows*dim f32 (LE).
inline void write_feature_file(const std::filesystem::path& path, const FeatureTable& table) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open " + path.string() + " for writing");
    os.write("TNFC", 4);
    binary::write_uint<std::uint32_t>(os, kFeatureFormatVersion);
    binary::write_uint<std::uint64_t>(os, table.rows());
    binary::write_uint<std::uint32_t>(os, static_cast<std::uint32_t>(table.dim));
    for (float v : table.values) binary::write_f32(os, v);
    if (!os) throw Error("write failed: " + path.string());
}

inline FeatureTable read_feature_file(const std::filesystem::path& path, std::string modality) {
    const std::string name = path.string();
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValidationError("missing feature file " + name);
    binary::expect_magic(is, "TNFC", name);
    const auto version = binary::read_uint<std::uint32_t>(is, name + " version");
    if (version != kFeatureFormatVersion)
        throw FormatError(detail::concat(name, ": unsupported feature format version ", version, " (expected ",
                                         kFeatureFormatVersion, ")"));
    const auto rows = binary::read_uint<std::uint64_t>(is, name + " row count");
    const auto dim = binary::read_uint<std::uint32_t>(is, name + " dim");
    if (dim == 0) throw ValidationError(name + ": header declares dim 0");

    const auto body_start = is.tellg();
    is.seekg(0, std::ios::end);
    const auto body_bytes = static_cast<std::uint64_t>(is.tellg() - body_start);
    is.seekg(body_start);
    const std::uint64_t expected = rows * dim * 4ULL;
    if (body_bytes != expected)
        throw ValidationError(detail::concat(name, ": dimension mismatch: header declares ", rows, " rows of dim ",
                                             dim, " (", expected, " bytes) but body holds ", body_bytes,
                                             " bytes"));

    std::vector<unsigned char> raw(static_cast<std::size_t>(body_bytes));
    is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::uint64_t>(is.gcount()) != body_bytes) throw FormatError(name + ": truncated body");

    FeatureTable t;
    t.modality = std::move(modality);
    t.dim = dim;
    t.values.resize(static_cast<std::size_t>(rows * dim));
    for (std::size_t i = 0; i < t.values.size(); ++i) {
        const unsigned char* b = raw.data() + 4 * i;
        const std::uint32_t bits = std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
                                   (std::uint32_t(b[3]) << 24);
        const float v = std::bit_cast<float>(bits);
        if (!std::isfinite(v))
            throw ValidationError(detail::concat(name, ": non-finite value at row ", i / dim, ", column ", i % dim));
        t.values[i] = v;
    }
    return t;
}

inline void write_items_file(const std::filesystem::path& path, const std::vector<Item>& items) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open " + path.string() + " for writing");
    for (const Item& it : items) {
        nlohmann::ordered_json j;
        j["item_id"] = it.item_id;
        j["category_id"] = it.category_id;
        nlohmann::ordered_json f = nlohmann::ordered_json::object();
        for (const auto& [m, row] : it.feature_row) f[m] = row;
        j["features"] = f;
        os << j.dump() << '\n';
    }
}

inline std::vector<Item> read_items_file(const std::filesystem::path& path) {
    const std::string name = path.string();
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValidationError("missing items file " + name);
    std::vector<Item> items;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const std::string where = detail::concat(name, ":", lineno);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ValidationError(where + ": invalid JSON (" + e.what() + ")");
        }
        if (!j.is_object() || !j.contains("item_id") || !j["item_id"].is_string() || !j.contains("category_id") ||
            !j["category_id"].is_string() || !j.contains("features") || !j["features"].is_object())
            throw ValidationError(where + ": expected keys item_id (string), category_id (string), features (object)");
        Item it;
        it.item_id = j["item_id"].get<std::string>();
        it.category_id = j["category_id"].get<std::string>();
        for (const auto& [m, row] : j["features"].items()) {
            if (!row.is_number_unsigned() && !(row.is_number_integer() && row.get<std::int64_t>() >= 0))
                throw ValidationError(where + ": feature row for modality '" + m + "' must be a non-negative integer");
            it.feature_row[m] = row.get<std::size_t>();
        }
        items.push_back(std::move(it));
    }
    return items;
}

inline void write_pairs_file(const std::filesystem::path& path, const std::vector<PairRecord>& pairs) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open " + path.string() + " for writing");
    os << "head_id\ttail_id\tsplit\n";
    for (const PairRecord& p : pairs) os << p.head_id << '\t' << p.tail_id << '\t' << split_name(p.split) << '\n';
}

inline std::vector<PairRecord> read_pairs_file(const std::filesystem::path& path) {
    const std::string name = path.string();
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValidationError("missing pairs file " + name);
    std::vector<PairRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::size_t start = 0;
        for (;;) {
            auto tab = line.find('\t', start);
            cols.push_back(line.substr(start, tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (lineno == 1 && cols.size() == 3 && cols[0] == "head_id" && cols[1] == "tail_id") continue;
        const std::string where = detail::concat(name, ":", lineno);
        if (cols.size() != 3) throw ValidationError(where + ": expected 3 tab-separated columns");
        auto split = parse_split(cols[2]);
        if (!split) throw ValidationError(where + ": unknown split \"" + cols[2] + "\"");
        out.push_back(PairRecord{cols[0], cols[1], *split, lineno});
    }
    return out;
}

/// Loads and validates a corpus directory (items.jsonl, pairs.tsv, <modality>.tnfc).
inline Corpus load_corpus(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw ValidationError("corpus directory not found: " + dir.string());
    auto items = read_items_file(dir / kItemsFile);
    std::set<std::string> modalities;
    for (const Item& it : items)
        for (const auto& [m, _] : it.feature_row) modalities.insert(m);
    std::map<std::string, FeatureTable> tables;
    for (const auto& m : modalities) tables.emplace(m, read_feature_file(dir / (m + kFeatureExtension), m));
    auto pairs = read_pairs_file(dir / kPairsFile);
    return Corpus::build(std::move(items), std::move(tables), pairs, (dir / kItemsFile).string(),
                         (dir / kPairsFile).string());
}

/// Deterministic shuffle-then-partition into (train, validation, test).
template <typename T>
std::array<std::vector<T>, 3> split_pairs(std::vector<T> all, const std::array<double, 3>& fractions,
                                          std::uint64_t seed) {
    double total = 0.0;
    for (double f : fractions) {
        if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("split fractions must lie in [0, 1]");
        total += f;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");

    Rng rng = make_rng(seed, "split_pairs");
    std::shuffle(all.begin(), all.end(), rng);
    const std::size_t n = all.size();
    const auto n_train = std::min<std::size_t>(n, static_cast<std::size_t>(std::llround(fractions[0] * n)));
    const auto n_val =
        std::min<std::size_t>(n - n_train, static_cast<std::size_t>(std::llround(fractions[1] * n)));
    std::array<std::vector<T>, 3> out;
    out[0].assign(all.begin(), all.begin() + n_train);
    out[1].assign(all.begin() + n_train, all.begin() + n_train + n_val);
    out[2].assign(all.begin() + n_train + n_val, all.end());
    return out;
}

}  // namespace tnfcm
