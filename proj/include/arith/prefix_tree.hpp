#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "arith/errors.hpp"

namespace arith {

enum class AdderFamily { Sklansky, BrentKung, KoggeStone, Ripple };

enum class ActionKind : uint8_t { DeleteCell = 0, AddCell = 1 };

enum class ActionMode { DeleteOnly, Full };

struct TreeAction {
    ActionKind kind;
    int16_t lsb; // i
    int16_t msb; // j
    friend auto operator<=>(const TreeAction&, const TreeAction&) = default;
};

struct PrefixMetrics {
    int level = 0; // max cell depth, inputs at 0
    int size = 0;  // non-input cell count
    friend bool operator==(const PrefixMetrics&, const PrefixMetrics&) = default;
};

// N-bit prefix network as a set of merge cells (i, j), 1 <= i <= j <= N.
// Diagonal cells are the inputs and always present. Value type; every edit
// produces a new tree, so instances are safe to share across threads.
//
// Canonical parent rule for a cell (i, j), i < j: let i' be the smallest lsb
// greater than i among the cells of column j ((j, j) guarantees it exists);
// the parents are (i', j) and (i, i'-1).
class PrefixTree {
public:
    explicit PrefixTree(int width); // inputs only

    int width() const { return width_; }
    int size() const { return size_; }
    bool has(int i, int j) const;

    // Raw edits; may leave the tree illegal until legalize() runs.
    void add(int i, int j);
    void remove(int i, int j);

    // Restores row-1 completeness, then adds missing canonical parents in a
    // single pass over columns N..2 (additions only touch lower columns).
    // Idempotent; never deletes cells.
    void legalize();

    bool is_legal() const;
    PrefixMetrics metrics() const; // throws IllegalTree

    // DeleteCell(i, j): i > 1, i < j, and the delete actually survives
    // legalization (a delete whose cell is immediately re-added as someone's
    // canonical parent would be a no-op and is pruned from the move set).
    // AddCell(i, j) (Full mode): absent and i < j.
    // Sorted lexicographically by (kind, i, j).
    std::vector<TreeAction> legal_actions(ActionMode mode) const;

    // Validated edit followed by legalize(); throws IllegalAction.
    PrefixTree applied(TreeAction action) const;

    // Non-diagonal cells sorted by (i, j).
    std::vector<std::pair<int, int>> cells() const;

    // Canonical parents of a present cell (i, j), i < j.
    std::pair<std::pair<int, int>, std::pair<int, int>> parents(int i, int j) const;

    // line 1: "prefixtree v1 width=<N>"
    // line 2: hex of the strict upper triangle, row-major, rows i = 1..N-1,
    //         columns j = i+1..N, first bit in the high nibble bit.
    std::string serialize() const;
    static PrefixTree deserialize(const std::string& text);

    friend bool operator==(const PrefixTree&, const PrefixTree&) = default;

private:
    void check_bounds(int i, int j) const;
    int next_lsb_above(int j, int i) const; // smallest present lsb > i in column j
    bool delete_changes(int i, int j) const;

    int width_ = 0;
    int size_ = 0;  // non-diagonal count
    int words_ = 0; // 64-bit words per column/row mask
    std::vector<uint64_t> col_; // column j: bit (i-1) set iff (i, j) present
    std::vector<uint64_t> row_; // row i: bit (j-1) set iff (i, j) present
};

PrefixTree generate_seed(AdderFamily family, int width);

PrefixTree apply_action(const PrefixTree& tree, TreeAction action);

// Snir: minimum size achievable at the given level, 2*width - 2 - level.
int theory_size_bound(int width, int level); // throws LevelTooSmall

int min_level(int width); // ceil(log2 width)

std::string family_name(AdderFamily family);

} // namespace arith
