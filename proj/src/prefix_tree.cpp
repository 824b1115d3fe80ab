#include "arith/prefix_tree.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>

namespace arith {

namespace {

bool is_pow2(int n) { return n >= 1 && (n & (n - 1)) == 0; }

int log2_exact(int n) { return std::countr_zero((unsigned)n); }

// first set bit index >= from in mask of nbits, or -1
int scan_from(const uint64_t* m, int from, int nbits) {
    if (from >= nbits) return -1;
    int w = from >> 6;
    uint64_t word = m[w] & (~0ULL << (from & 63));
    while (true) {
        if (word) return (w << 6) + std::countr_zero(word);
        if (++w > (nbits - 1) >> 6) return -1;
        word = m[w];
    }
}

// highest set bit index < nbits, or -1
int scan_top(const uint64_t* m, int nbits) {
    if (nbits <= 0) return -1;
    int w = (nbits - 1) >> 6;
    uint64_t word = m[w];
    if (nbits & 63) word &= ~0ULL >> (64 - (nbits & 63));
    while (true) {
        if (word) return (w << 6) + 63 - std::countl_zero(word);
        if (--w < 0) return -1;
        word = m[w];
    }
}

} // namespace

PrefixTree::PrefixTree(int width) {
    if (width < 1) throw UnsupportedWidth("prefix tree width must be >= 1");
    width_ = width;
    words_ = (width + 63) / 64;
    col_.assign((size_t)width * words_, 0);
    row_.assign((size_t)width * words_, 0);
    for (int i = 1; i <= width; ++i) {
        col_[(size_t)(i - 1) * words_ + ((i - 1) >> 6)] |= 1ULL << ((i - 1) & 63);
        row_[(size_t)(i - 1) * words_ + ((i - 1) >> 6)] |= 1ULL << ((i - 1) & 63);
    }
}

void PrefixTree::check_bounds(int i, int j) const {
    if (i < 1 || j < i || j > width_) throw IllegalAction("cell index out of range");
}

bool PrefixTree::has(int i, int j) const {
    check_bounds(i, j);
    return (col_[(size_t)(j - 1) * words_ + ((i - 1) >> 6)] >> ((i - 1) & 63)) & 1;
}

void PrefixTree::add(int i, int j) {
    check_bounds(i, j);
    uint64_t& cw = col_[(size_t)(j - 1) * words_ + ((i - 1) >> 6)];
    uint64_t cbit = 1ULL << ((i - 1) & 63);
    if (cw & cbit) return;
    cw |= cbit;
    row_[(size_t)(i - 1) * words_ + ((j - 1) >> 6)] |= 1ULL << ((j - 1) & 63);
    if (i != j) ++size_;
}

void PrefixTree::remove(int i, int j) {
    check_bounds(i, j);
    if (i == j) throw IllegalAction("input cells are not removable");
    uint64_t& cw = col_[(size_t)(j - 1) * words_ + ((i - 1) >> 6)];
    uint64_t cbit = 1ULL << ((i - 1) & 63);
    if (!(cw & cbit)) return;
    cw &= ~cbit;
    row_[(size_t)(i - 1) * words_ + ((j - 1) >> 6)] &= ~(1ULL << ((j - 1) & 63));
    --size_;
}

int PrefixTree::next_lsb_above(int j, int i) const {
    return scan_from(&col_[(size_t)(j - 1) * words_], i, width_) + 1;
}

void PrefixTree::legalize() {
    for (int j = 2; j <= width_; ++j)
        add(1, j);
    for (int j = width_; j >= 2; --j) {
        const uint64_t* mask = &col_[(size_t)(j - 1) * words_];
        for (int b = scan_from(mask, 0, width_); b >= 0 && b < j - 1;
             b = scan_from(mask, b + 1, width_)) {
            int i = b + 1;
            int i2 = next_lsb_above(j, i);
            if (i2 - 1 > i) add(i, i2 - 1); // lower parent, column i2-1 < j
        }
    }
}

bool PrefixTree::is_legal() const {
    for (int j = 2; j <= width_; ++j)
        if (!has(1, j)) return false;
    for (int j = 2; j <= width_; ++j) {
        const uint64_t* mask = &col_[(size_t)(j - 1) * words_];
        for (int b = scan_from(mask, 0, width_); b >= 0 && b < j - 1;
             b = scan_from(mask, b + 1, width_)) {
            int i = b + 1;
            int i2 = next_lsb_above(j, i);
            if (i2 - 1 > i && !has(i, i2 - 1)) return false;
        }
    }
    return true;
}

PrefixMetrics PrefixTree::metrics() const {
    if (!is_legal()) throw IllegalTree("prefix tree violates legality invariants");
    const int n = width_;
    // level[(j-1)*n + (i-1)]; filled column-ascending, lsb-descending so both
    // canonical parents are already computed when a cell is visited.
    static thread_local std::vector<int16_t> lvl;
    lvl.assign((size_t)n * n, 0);
    int max_level = 0;
    for (int j = 2; j <= n; ++j) {
        const uint64_t* mask = &col_[(size_t)(j - 1) * words_];
        for (int b = scan_top(mask, n); b >= 0; b = (b == 0 ? -1 : scan_top(mask, b))) {
            int i = b + 1;
            if (i == j) continue;
            int i2 = next_lsb_above(j, i);
            int16_t up = lvl[(size_t)(j - 1) * n + (i2 - 1)];
            int16_t lo = (i2 - 1 == i) ? int16_t(0) : lvl[(size_t)(i2 - 2) * n + (i - 1)];
            int16_t v = (int16_t)(1 + std::max(up, lo));
            lvl[(size_t)(j - 1) * n + (i - 1)] = v;
            if (v > max_level) max_level = v;
        }
    }
    return PrefixMetrics{max_level, size_};
}

std::vector<TreeAction> PrefixTree::legal_actions(ActionMode mode) const {
    std::vector<TreeAction> out;
    for (int i = 2; i < width_; ++i) {
        const uint64_t* mask = &row_[(size_t)(i - 1) * words_];
        for (int b = scan_from(mask, i, width_); b >= 0; b = scan_from(mask, b + 1, width_)) {
            TreeAction a{ActionKind::DeleteCell, (int16_t)i, (int16_t)(b + 1)};
            if (delete_changes(i, b + 1)) out.push_back(a);
        }
    }
    if (mode == ActionMode::Full) {
        for (int i = 2; i < width_; ++i)
            for (int j = i + 1; j <= width_; ++j)
                if (!has(i, j)) out.push_back({ActionKind::AddCell, (int16_t)i, (int16_t)j});
    }
    return out;
}

bool PrefixTree::delete_changes(int i, int j) const {
    PrefixTree next = *this;
    next.remove(i, j);
    next.legalize();
    return next != *this;
}

PrefixTree PrefixTree::applied(TreeAction a) const {
    int i = a.lsb, j = a.msb;
    if (i < 1 || j <= i || j > width_) throw IllegalAction("action target out of range");
    PrefixTree next = *this;
    if (a.kind == ActionKind::AddCell) {
        if (has(i, j)) throw IllegalAction("cell already present");
        next.add(i, j);
        next.legalize();
    } else {
        if (!has(i, j)) throw IllegalAction("cell not present");
        if (i == 1) throw IllegalAction("row-1 cells are outputs and not deletable");
        next.remove(i, j);
        next.legalize();
        if (next == *this)
            throw IllegalAction("delete would be undone by legalization");
    }
    return next;
}

std::vector<std::pair<int, int>> PrefixTree::cells() const {
    std::vector<std::pair<int, int>> out;
    out.reserve(size_);
    for (int i = 1; i <= width_; ++i) {
        const uint64_t* mask = &row_[(size_t)(i - 1) * words_];
        for (int b = scan_from(mask, i, width_); b >= 0; b = scan_from(mask, b + 1, width_))
            out.emplace_back(i, b + 1);
    }
    return out;
}

std::pair<std::pair<int, int>, std::pair<int, int>> PrefixTree::parents(int i, int j) const {
    if (i >= j || !has(i, j)) throw IllegalTree("parents are defined for present cells with i < j");
    int i2 = next_lsb_above(j, i);
    return {{i2, j}, {i, i2 - 1}};
}

std::string PrefixTree::serialize() const {
    std::string out = "prefixtree v1 width=" + std::to_string(width_) + "\n";
    int nibble = 0, filled = 0;
    static const char* hexdig = "0123456789abcdef";
    for (int i = 1; i < width_; ++i)
        for (int j = i + 1; j <= width_; ++j) {
            nibble = (nibble << 1) | (has(i, j) ? 1 : 0);
            if (++filled == 4) {
                out += hexdig[nibble];
                nibble = filled = 0;
            }
        }
    if (filled) out += hexdig[nibble << (4 - filled)];
    out += '\n';
    return out;
}

PrefixTree PrefixTree::deserialize(const std::string& text) {
    static const char header[] = "prefixtree v1 width=";
    if (text.rfind(header, 0) != 0) throw ParseError("bad prefixtree header");
    size_t pos = sizeof(header) - 1;
    size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) throw ParseError("missing header newline");
    int width = 0;
    const std::string num = text.substr(pos, eol - pos);
    if (num.empty() || num.size() > 9) throw ParseError("bad width field");
    for (char c : num) {
        if (c < '0' || c > '9') throw ParseError("bad width field");
        width = width * 10 + (c - '0');
    }
    if (width < 1) throw ParseError("bad width field");

    std::string hex = text.substr(eol + 1);
    while (!hex.empty() && (hex.back() == '\n' || hex.back() == '\r')) hex.pop_back();
    size_t bits = (size_t)width * (width - 1) / 2;
    size_t want = (bits + 3) / 4;
    if (hex.size() != want)
        throw WidthMismatch("payload length does not match header width");

    PrefixTree tree(width);
    size_t bit = 0;
    for (char c : hex) {
        int v;
        if (c >= '0' && c <= '9') v = c - '0';
        else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
        else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
        else throw ParseError("invalid hex digit");
        for (int k = 3; k >= 0; --k, ++bit) {
            bool set = (v >> k) & 1;
            if (bit >= bits) {
                if (set) throw ParseError("nonzero padding bits");
                continue;
            }
            if (set) {
                // row-major over the strict upper triangle
                size_t r = bit;
                int i = 1;
                while (r >= (size_t)(width - i)) {
                    r -= (size_t)(width - i);
                    ++i;
                }
                tree.add(i, i + 1 + (int)r);
            }
        }
    }
    return tree;
}

PrefixTree generate_seed(AdderFamily family, int width) {
    if (width < 2) throw UnsupportedWidth("seed width must be >= 2");
    PrefixTree t(width);
    switch (family) {
    case AdderFamily::Ripple:
        for (int j = 2; j <= width; ++j)
            t.add(1, j);
        return t;
    case AdderFamily::Sklansky: {
        if (!is_pow2(width))
            throw UnsupportedWidth("Sklansky seeds require a power-of-two width");
        int k = log2_exact(width);
        for (int s = 1; s <= k; ++s)
            for (int j = 1; j <= width; ++j)
                if (((j - 1) >> (s - 1)) & 1)
                    t.add((((j - 1) >> s) << s) + 1, j);
        return t;
    }
    case AdderFamily::BrentKung: {
        if (!is_pow2(width))
            throw UnsupportedWidth("Brent-Kung seeds require a power-of-two width");
        int k = log2_exact(width);
        for (int s = 1; s <= k; ++s)
            for (int j = 1 << s; j <= width; j += 1 << s)
                t.add(j - (1 << s) + 1, j);
        for (int s = k - 1; s >= 0; --s)
            for (int j = 3 * (1 << s); j <= width; j += 2 << s)
                t.add(1, j);
        return t;
    }
    case AdderFamily::KoggeStone: {
        if (!is_pow2(width))
            throw UnsupportedWidth("Kogge-Stone seeds require a power-of-two width");
        int k = log2_exact(width);
        for (int s = 1; s <= k; ++s)
            for (int j = (1 << (s - 1)) + 1; j <= width; ++j)
                t.add(std::max(1, j - (1 << s) + 1), j);
        return t;
    }
    }
    throw UnsupportedWidth("unknown adder family");
}

PrefixTree apply_action(const PrefixTree& tree, TreeAction action) {
    return tree.applied(action);
}

int min_level(int width) {
    int k = 0;
    while ((1 << k) < width) ++k;
    return k;
}

int theory_size_bound(int width, int level) {
    if (width < 1) throw UnsupportedWidth("width must be positive");
    if (level < min_level(width))
        throw LevelTooSmall("level below ceil(log2 width)");
    return 2 * width - 2 - level;
}

std::string family_name(AdderFamily family) {
    switch (family) {
    case AdderFamily::Sklansky: return "sklansky";
    case AdderFamily::BrentKung: return "brent-kung";
    case AdderFamily::KoggeStone: return "kogge-stone";
    case AdderFamily::Ripple: return "ripple";
    }
    return "?";
}

} // namespace arith
