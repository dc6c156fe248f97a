#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "polydp/errors.hpp"

namespace polydp {

/// An n x d binary table stored row-major as 64-bit words. Rows keep
/// their multiplicity; counting queries average over all of them.
class Database {
  public:
    Database(std::vector<std::string> column_names, std::size_t reserve_rows = 0)
        : names_(std::move(column_names)), words_((names_.size() + 63) / 64) {
        if (names_.empty()) throw std::invalid_argument("Database: needs at least one column");
        rows_.reserve(reserve_rows * words_);
    }

    int d() const { return static_cast<int>(names_.size()); }
    std::size_t n() const { return words_ == 0 ? 0 : rows_.size() / words_; }
    const std::vector<std::string>& column_names() const { return names_; }
    std::size_t words_per_row() const { return words_; }

    void add_row(std::span<const std::uint8_t> bits) {
        if (bits.size() != names_.size()) throw std::invalid_argument("Database::add_row: width mismatch");
        std::size_t base = rows_.size();
        rows_.resize(base + words_, 0);
        for (std::size_t i = 0; i < bits.size(); ++i) {
            if (bits[i] > 1) throw std::invalid_argument("Database::add_row: cell not in {0,1}");
            if (bits[i]) rows_[base + i / 64] |= std::uint64_t{1} << (i % 64);
        }
    }

    bool bit(std::size_t row, int col) const {
        return rows_[row * words_ + static_cast<std::size_t>(col) / 64] >>
                   (static_cast<std::size_t>(col) % 64) &
               1;
    }

    std::span<const std::uint64_t> row_words(std::size_t row) const {
        return {rows_.data() + row * words_, words_};
    }

    std::vector<std::uint8_t> row_bits(std::size_t row) const {
        std::vector<std::uint8_t> bits(names_.size());
        for (int c = 0; c < d(); ++c) bits[static_cast<std::size_t>(c)] = bit(row, c) ? 1 : 0;
        return bits;
    }

    int column_index(const std::string& name) const {
        auto it = std::find(names_.begin(), names_.end(), name);
        if (it == names_.end()) throw parse_error("unknown column: " + name);
        return static_cast<int>(it - names_.begin());
    }

    /// CSV: first line comma-separated column names, then 0/1 cells.
    static Database load_csv(std::istream& is) {
        std::string line;
        if (!std::getline(is, line)) throw parse_error("load_csv: empty input");
        strip_cr(line);
        std::vector<std::string> names = split(line);
        for (const auto& name : names)
            if (name.empty()) throw parse_error("load_csv: empty column name");
        Database db(std::move(names));
        std::vector<std::uint8_t> bits;
        std::size_t lineno = 1;
        while (std::getline(is, line)) {
            ++lineno;
            strip_cr(line);
            if (line.empty()) continue;
            std::vector<std::string> cells = split(line);
            if (cells.size() != db.names_.size())
                throw parse_error("load_csv: line " + std::to_string(lineno) + " has " +
                                  std::to_string(cells.size()) + " cells, expected " +
                                  std::to_string(db.names_.size()));
            bits.clear();
            for (const auto& cell : cells) {
                if (cell == "0")
                    bits.push_back(0);
                else if (cell == "1")
                    bits.push_back(1);
                else
                    throw parse_error("load_csv: line " + std::to_string(lineno) +
                                      ": cell '" + cell + "' is not 0/1");
            }
            db.add_row(bits);
        }
        if (db.n() == 0) throw parse_error("load_csv: no data rows");
        return db;
    }

  private:
    static void strip_cr(std::string& s) {
        if (!s.empty() && s.back() == '\r') s.pop_back();
    }

    static std::vector<std::string> split(const std::string& line) {
        std::vector<std::string> out;
        std::string tok;
        std::istringstream ss(line);
        while (std::getline(ss, tok, ',')) out.push_back(tok);
        if (!line.empty() && line.back() == ',') out.emplace_back();
        return out;
    }

    std::vector<std::string> names_;
    std::size_t words_;
    std::vector<std::uint64_t> rows_;
};

/// Appends the complement column ~i as column d+i for every i, turning
/// arbitrary marginals into monotone disjunctions over 2d attributes.
inline Database extend_with_complements(const Database& db) {
    std::vector<std::string> names = db.column_names();
    for (const auto& name : db.column_names()) names.push_back("!" + name);
    Database ext(std::move(names), db.n());
    std::vector<std::uint8_t> bits;
    for (std::size_t r = 0; r < db.n(); ++r) {
        bits = db.row_bits(r);
        std::size_t d = static_cast<std::size_t>(db.d());
        bits.resize(2 * d);
        for (std::size_t i = 0; i < d; ++i) bits[d + i] = bits[i] ? 0 : 1;
        ext.add_row(bits);
    }
    return ext;
}

/// A monotone disjunction index vector y in {-1,1}^d, stored as the set
/// of selected columns (the coordinates equal to -1).
struct DisjunctionIndex {
    int dimension = 0;
    std::vector<int> selected;  // sorted distinct column indices

    int hamming_weight() const { return static_cast<int>(selected.size()); }

    std::vector<std::int8_t> to_pm1() const {
        std::vector<std::int8_t> y(static_cast<std::size_t>(dimension), 1);
        for (int i : selected) y[static_cast<std::size_t>(i)] = -1;
        return y;
    }

    std::vector<std::uint64_t> to_mask(std::size_t words) const {
        std::vector<std::uint64_t> mask(words, 0);
        for (int i : selected) mask[static_cast<std::size_t>(i) / 64] |= std::uint64_t{1} << (i % 64);
        return mask;
    }

    void validate(int k_cap = -1) const {
        int prev = -1;
        for (int i : selected) {
            if (i <= prev || i >= dimension)
                throw std::invalid_argument("DisjunctionIndex: bad column set");
            prev = i;
        }
        if (k_cap >= 0 && hamming_weight() > k_cap)
            throw std::invalid_argument("DisjunctionIndex: arity exceeds k");
    }
};

/// A k-way marginal (S, t): what fraction of rows has x_j = t_j for every
/// j in S.
struct MarginalQuery {
    std::vector<int> attrs;            // sorted distinct column indices
    std::vector<std::uint8_t> pattern;  // same length as attrs

    void validate(int d, int k_cap = -1) const {
        if (attrs.size() != pattern.size())
            throw std::invalid_argument("MarginalQuery: pattern length mismatch");
        int prev = -1;
        for (int i : attrs) {
            if (i <= prev || i >= d) throw std::invalid_argument("MarginalQuery: bad attribute set");
            prev = i;
        }
        for (std::uint8_t b : pattern)
            if (b > 1) throw std::invalid_argument("MarginalQuery: pattern bit not in {0,1}");
        if (k_cap >= 0 && static_cast<int>(attrs.size()) > k_cap)
            throw std::invalid_argument("MarginalQuery: arity exceeds k");
    }
};

/// Fraction of rows with some selected attribute set to 1.
inline double true_answer_disjunction(const Database& db, const DisjunctionIndex& y) {
    if (y.dimension != db.d()) throw std::invalid_argument("true_answer_disjunction: dimension mismatch");
    y.validate();
    const auto mask = y.to_mask(db.words_per_row());
    std::size_t hits = 0;
    for (std::size_t r = 0; r < db.n(); ++r) {
        auto row = db.row_words(r);
        for (std::size_t w = 0; w < mask.size(); ++w) {
            if (row[w] & mask[w]) {
                ++hits;
                break;
            }
        }
    }
    return static_cast<double>(hits) / static_cast<double>(db.n());
}

/// Fraction of rows matching the marginal's pattern on its attribute set;
/// the empty marginal answers 1.
inline double true_answer_marginal(const Database& db, const MarginalQuery& q) {
    q.validate(db.d());
    std::size_t hits = 0;
    for (std::size_t r = 0; r < db.n(); ++r) {
        bool match = true;
        for (std::size_t j = 0; j < q.attrs.size(); ++j) {
            if (db.bit(r, q.attrs[j]) != (q.pattern[j] != 0)) {
                match = false;
                break;
            }
        }
        if (match) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(db.n());
}

/// De Morgan transport onto the complement-extended database: the
/// conjunction (x_j = t_j for all j in S) fails iff some literal fails,
/// so true_answer_marginal(D, q) =
/// 1 - true_answer_disjunction(extend_with_complements(D), y) with y
/// selecting column j when t_j = 0 and column d+j when t_j = 1.
inline DisjunctionIndex marginal_to_disjunction(const MarginalQuery& q, int d) {
    q.validate(d);
    DisjunctionIndex y;
    y.dimension = 2 * d;
    for (std::size_t j = 0; j < q.attrs.size(); ++j)
        y.selected.push_back(q.pattern[j] ? d + q.attrs[j] : q.attrs[j]);
    std::sort(y.selected.begin(), y.selected.end());
    return y;
}

/// One entry of a query stream: either a marginal or a direct monotone
/// disjunction over the original columns.
struct Query {
    enum class Kind { marginal, disjunction };
    std::string id;
    Kind kind = Kind::marginal;
    std::vector<int> attrs;
    std::vector<std::uint8_t> pattern;  // marginals only

    MarginalQuery marginal() const { return MarginalQuery{attrs, pattern}; }

    int arity() const { return static_cast<int>(attrs.size()); }

    /// Index vector over the 2d extended attribute space. Disjunctions
    /// select their original columns; marginals go through De Morgan.
    DisjunctionIndex extended_index(int d) const {
        if (kind == Kind::marginal) return marginal_to_disjunction(marginal(), d);
        DisjunctionIndex y;
        y.dimension = 2 * d;
        y.selected = attrs;
        y.validate();
        return y;
    }

    /// true iff the emitted answer is 1 minus the disjunction answer.
    bool negated() const { return kind == Kind::marginal; }

    double true_answer(const Database& db) const {
        if (kind == Kind::marginal) return true_answer_marginal(db, marginal());
        DisjunctionIndex y{db.d(), attrs};
        return true_answer_disjunction(db, y);
    }
};

struct QuerySequence {
    std::vector<Query> queries;
    int max_arity = 0;

    std::size_t size() const { return queries.size(); }
};

}  // namespace polydp
