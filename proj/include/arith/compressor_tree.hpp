#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "arith/errors.hpp"

namespace arith {

enum class CompressKind : uint8_t { FA = 0, HA = 1 };

// Gate-unit path delays through the adder cells: a full adder routes addends
// through three gates and the carry input through two; a half adder is one
// gate deep. Both outputs take the column worst case.
inline constexpr int kFaAddendPath = 3;
inline constexpr int kFaCarryInPath = 2;
inline constexpr int kHaPath = 1;

inline int fa_output_delay(int a, int b, int carry_in) {
    int d = a + kFaAddendPath;
    if (b + kFaAddendPath > d) d = b + kFaAddendPath;
    if (carry_in + kFaCarryInPath > d) d = carry_in + kFaCarryInPath;
    return d;
}

inline int ha_output_delay(int a, int b) { return (a > b ? a : b) + kHaPath; }

// Indices of the k lowest-delay bits of a column, ties broken by insertion
// order (vector position). Returned in ascending (delay, index) order, so the
// last pick carries the largest delay and becomes the full-adder carry input.
std::array<int, 3> select_lowest(const std::vector<int>& delays, int k);

// One planned compression: where it acts, which bits it consumes (indices
// into the column before removal) and the delay of both output bits.
struct CompressPick {
    int digit = 0;
    CompressKind kind = CompressKind::FA;
    std::array<int, 3> indices{-1, -1, -1};
    int arity = 0;
    int out_delay = 0;
};

// Normalized 8-feature state vector:
//   [0] action digit / (2N-2)
//   [1] max delay over all bits / Dhat
//   [2] half adders used in the action digit / N
//   [3..4] action mask (both actions are always legal at the action digit)
//   [5..7] delays of the 3 lowest-delay bits in the action digit / Dhat
// Dhat = 3*ceil(log1.5 N) + 4, a fixed a-priori delay ceiling.
using FeatureVector = std::array<double, 8>;

double delay_ceiling(int width);

// Column-by-column reduction of the N^2 partial-product bits. Columns start
// at 2N-1 entries and grow on demand: heavy half-adder play can push carries
// past the top initial column (those high bits are provably constant zero in
// value but still occupy state). Value type, cheap to copy.
class CompressorState {
public:
    static CompressorState initial(int width); // width >= 2

    int width() const { return width_; }
    int step() const { return (int)actions_.size(); }
    const std::vector<CompressKind>& actions() const { return actions_; }
    int column_count() const { return (int)columns_.size(); }
    const std::vector<int>& column(int c) const { return columns_[c]; }
    int ha_count(int c) const { return ha_per_column_[c]; }
    int total_bits() const;
    int fa_total() const { return fa_total_; }
    int ha_total() const { return ha_total_; }
    int max_delay() const;

    bool terminal() const;
    std::optional<int> action_digit() const; // lowest column with > 2 bits

    CompressPick plan(CompressKind kind) const; // throws TerminalState
    void apply(const CompressPick& pick);
    void apply(CompressKind kind) { apply(plan(kind)); }

    FeatureVector features() const; // throws TerminalState

    // Terminal-state operand binding: per column, first remaining bit feeds
    // operand X, the second (if any) feeds operand Y. Bits at weight >= 2N
    // cannot appear in the 2N-bit operands; they are provably zero and
    // reported as dropped.
    struct OperandAssignment {
        std::vector<uint8_t> x_present; // 2N entries
        std::vector<uint8_t> y_present; // 2N entries
        int dropped_zero_bits = 0;
    };
    OperandAssignment finalize_operands() const; // throws NotTerminal

    // "compressor v1 width=<N> actions=<F/H string>"
    std::string serialize() const;
    static CompressorState replay(int width, const std::vector<CompressKind>& actions);
    static CompressorState deserialize(const std::string& text);

    friend bool operator==(const CompressorState&, const CompressorState&) = default;

private:
    int width_ = 0;
    int fa_total_ = 0;
    int ha_total_ = 0;
    std::vector<std::vector<int>> columns_; // per-column bit delays, insertion order
    std::vector<int> ha_per_column_;
    std::vector<CompressKind> actions_;
};

std::string actions_to_string(const std::vector<CompressKind>& actions);
std::vector<CompressKind> actions_from_string(const std::string& text);

} // namespace arith
