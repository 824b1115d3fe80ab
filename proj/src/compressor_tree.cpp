#include "arith/compressor_tree.hpp"

#include <algorithm>
#include <cmath>

namespace arith {

std::array<int, 3> select_lowest(const std::vector<int>& delays, int k) {
    std::array<int, 3> picks{-1, -1, -1};
    for (int p = 0; p < k; ++p) {
        int best = -1;
        for (int i = 0; i < (int)delays.size(); ++i) {
            if (i == picks[0] || i == picks[1]) continue;
            if (best < 0 || delays[i] < delays[best]) best = i;
        }
        picks[p] = best;
    }
    return picks;
}

double delay_ceiling(int width) {
    int layers = (int)std::ceil(std::log((double)width) / std::log(1.5) - 1e-12);
    return 3.0 * layers + 4.0;
}

CompressorState CompressorState::initial(int width) {
    if (width < 2) throw UnsupportedWidth("compressor width must be >= 2");
    CompressorState s;
    s.width_ = width;
    s.columns_.resize(2 * width - 1);
    for (int c = 0; c < 2 * width - 1; ++c) {
        int count = width - std::abs(c - (width - 1));
        s.columns_[c].assign(count, 1); // one AND gate per partial-product bit
    }
    s.ha_per_column_.assign(2 * width - 1, 0);
    return s;
}

int CompressorState::total_bits() const {
    int n = 0;
    for (const auto& col : columns_) n += (int)col.size();
    return n;
}

int CompressorState::max_delay() const {
    int d = 0;
    for (const auto& col : columns_)
        for (int v : col) d = std::max(d, v);
    return d;
}

bool CompressorState::terminal() const {
    for (const auto& col : columns_)
        if (col.size() > 2) return false;
    return true;
}

std::optional<int> CompressorState::action_digit() const {
    for (int c = 0; c < (int)columns_.size(); ++c)
        if (columns_[c].size() > 2) return c;
    return std::nullopt;
}

CompressPick CompressorState::plan(CompressKind kind) const {
    auto digit = action_digit();
    if (!digit) throw TerminalState("compressor state is terminal");
    CompressPick pick;
    pick.digit = *digit;
    pick.kind = kind;
    pick.arity = (kind == CompressKind::FA) ? 3 : 2;
    const auto& col = columns_[*digit];
    pick.indices = select_lowest(col, pick.arity);
    if (kind == CompressKind::FA) {
        // the last pick has the largest delay and feeds the carry input
        pick.out_delay = fa_output_delay(col[pick.indices[0]], col[pick.indices[1]],
                                         col[pick.indices[2]]);
    } else {
        pick.out_delay = ha_output_delay(col[pick.indices[0]], col[pick.indices[1]]);
    }
    return pick;
}

void CompressorState::apply(const CompressPick& pick) {
    auto& col = columns_[pick.digit];
    std::array<int, 3> idx = pick.indices;
    std::sort(idx.begin(), idx.begin() + pick.arity, std::greater<int>());
    for (int p = 0; p < pick.arity; ++p)
        col.erase(col.begin() + idx[p]);
    col.push_back(pick.out_delay); // sum bit
    if (pick.digit + 1 >= (int)columns_.size()) {
        columns_.emplace_back();
        ha_per_column_.push_back(0);
    }
    columns_[pick.digit + 1].push_back(pick.out_delay); // carry bit
    if (pick.kind == CompressKind::FA) {
        ++fa_total_;
    } else {
        ++ha_total_;
        ++ha_per_column_[pick.digit];
    }
    actions_.push_back(pick.kind);
}

FeatureVector CompressorState::features() const {
    auto digit = action_digit();
    if (!digit) throw TerminalState("terminal state has no features");
    const double dhat = delay_ceiling(width_);
    const auto& col = columns_[*digit];
    auto picks = select_lowest(col, 3);
    FeatureVector f{};
    f[0] = (double)*digit / (2.0 * width_ - 2.0);
    f[1] = (double)max_delay() / dhat;
    f[2] = (double)ha_per_column_[*digit] / (double)width_;
    f[3] = 1.0;
    f[4] = 1.0;
    for (int p = 0; p < 3; ++p)
        f[5 + p] = (double)col[picks[p]] / dhat;
    return f;
}

CompressorState::OperandAssignment CompressorState::finalize_operands() const {
    if (!terminal()) throw NotTerminal("operands are bound on terminal states only");
    OperandAssignment a;
    a.x_present.assign(2 * width_, 0);
    a.y_present.assign(2 * width_, 0);
    for (int c = 0; c < (int)columns_.size(); ++c) {
        const auto& col = columns_[c];
        if (c >= 2 * width_) {
            a.dropped_zero_bits += (int)col.size();
            continue;
        }
        if (!col.empty()) a.x_present[c] = 1;
        if (col.size() >= 2) a.y_present[c] = 1;
    }
    return a;
}

std::string actions_to_string(const std::vector<CompressKind>& actions) {
    std::string s;
    s.reserve(actions.size());
    for (CompressKind k : actions)
        s += (k == CompressKind::FA) ? 'F' : 'H';
    return s;
}

std::vector<CompressKind> actions_from_string(const std::string& text) {
    std::vector<CompressKind> out;
    out.reserve(text.size());
    for (char c : text) {
        if (c == 'F') out.push_back(CompressKind::FA);
        else if (c == 'H') out.push_back(CompressKind::HA);
        else throw ParseError("compressor actions must be F or H");
    }
    return out;
}

std::string CompressorState::serialize() const {
    return "compressor v1 width=" + std::to_string(width_) +
           " actions=" + actions_to_string(actions_) + "\n";
}

CompressorState CompressorState::replay(int width, const std::vector<CompressKind>& actions) {
    CompressorState s = initial(width);
    for (CompressKind k : actions)
        s.apply(k);
    return s;
}

CompressorState CompressorState::deserialize(const std::string& text) {
    static const char header[] = "compressor v1 width=";
    if (text.rfind(header, 0) != 0) throw ParseError("bad compressor header");
    size_t pos = sizeof(header) - 1;
    size_t sp = text.find(' ', pos);
    if (sp == std::string::npos) throw ParseError("missing actions field");
    int width = 0;
    const std::string num = text.substr(pos, sp - pos);
    if (num.empty() || num.size() > 9) throw ParseError("bad width field");
    for (char c : num) {
        if (c < '0' || c > '9') throw ParseError("bad width field");
        width = width * 10 + (c - '0');
    }
    static const char tag[] = "actions=";
    if (text.compare(sp + 1, sizeof(tag) - 1, tag) != 0)
        throw ParseError("missing actions field");
    std::string body = text.substr(sp + 1 + sizeof(tag) - 1);
    while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.pop_back();
    return replay(width, actions_from_string(body));
}

} // namespace arith
