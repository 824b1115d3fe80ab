#include "arith/hdl_netlist.hpp"

#include <algorithm>
#include <cctype>
#include <thread>

#include "arith/rng.hpp"
#include "json.hpp"

namespace arith {

int Netlist::add_input(const std::string& name, int bits) {
    if (sealed_inputs_) throw UnboundInput("inputs must be declared before gates");
    Port p;
    p.name = name;
    for (int k = 0; k < bits; ++k) p.wires.push_back(wire_count_++);
    inputs_.push_back(std::move(p));
    first_gate_wire_ = wire_count_;
    return (int)inputs_.size() - 1;
}

WireId Netlist::emit(GateKind kind, WireId a, WireId b) {
    sealed_inputs_ = true;
    int needed = kind == GateKind::Const0 ? 0 : (kind == GateKind::Not ? 1 : 2);
    if (needed >= 1 && (a < 0 || a >= wire_count_)) throw UnboundInput("gate operand a undefined");
    if (needed >= 2 && (b < 0 || b >= wire_count_)) throw UnboundInput("gate operand b undefined");
    gates_.push_back(Gate{kind, needed >= 1 ? a : -1, needed >= 2 ? b : -1});
    return wire_count_++;
}

void Netlist::bind_output(const std::string& name, std::vector<WireId> wires) {
    for (WireId w : wires)
        if (w < 0 || w >= wire_count_) throw UnboundInput("output wire undefined");
    outputs_.push_back(Port{name, std::move(wires)});
}

std::vector<std::vector<uint64_t>>
Netlist::simulate(const std::vector<std::vector<uint64_t>>& input_values) const {
    if (input_values.size() != inputs_.size())
        throw UnboundInput("simulate: wrong number of input ports");
    for (size_t p = 0; p < inputs_.size(); ++p)
        if (input_values[p].size() != inputs_[p].wires.size())
            throw UnboundInput("simulate: wrong bit count for port " + inputs_[p].name);

    std::vector<uint64_t> v((size_t)wire_count_, 0);
    for (size_t p = 0; p < inputs_.size(); ++p)
        for (size_t k = 0; k < inputs_[p].wires.size(); ++k)
            v[(size_t)inputs_[p].wires[k]] = input_values[p][k];

    size_t w = (size_t)first_gate_wire_;
    for (const Gate& g : gates_) {
        switch (g.kind) {
        case GateKind::And: v[w] = v[(size_t)g.a] & v[(size_t)g.b]; break;
        case GateKind::Or: v[w] = v[(size_t)g.a] | v[(size_t)g.b]; break;
        case GateKind::Xor: v[w] = v[(size_t)g.a] ^ v[(size_t)g.b]; break;
        case GateKind::Not: v[w] = ~v[(size_t)g.a]; break;
        case GateKind::Const0: v[w] = 0; break;
        }
        ++w;
    }

    std::vector<std::vector<uint64_t>> out(outputs_.size());
    for (size_t p = 0; p < outputs_.size(); ++p) {
        out[p].reserve(outputs_[p].wires.size());
        for (WireId wire : outputs_[p].wires) out[p].push_back(v[(size_t)wire]);
    }
    return out;
}

namespace {

// Emits the prefix network for the given operand wires and returns the sum
// wires plus carry-out. G(1:N) is the carry-out directly: Eq-form
// g_N + p_N*G covers the same function since p_N*g_N = 0.
struct PrefixAdderWires {
    std::vector<WireId> sum;  // s_1..s_N
    WireId carry_out;
};

PrefixAdderWires emit_prefix_adder(Netlist& nl, const PrefixTree& tree,
                                   const std::vector<WireId>& a, const std::vector<WireId>& b) {
    const int n = tree.width();
    std::vector<WireId> p((size_t)n + 1), g((size_t)n + 1);
    for (int i = 1; i <= n; ++i) {
        p[i] = nl.emit(GateKind::Xor, a[i - 1], b[i - 1]);
        g[i] = nl.emit(GateKind::And, a[i - 1], b[i - 1]);
    }
    // P/G wires per interval; (i, j) at [ (j-1)*n + (i-1) ]
    std::vector<WireId> P((size_t)n * n, -1), G((size_t)n * n, -1);
    for (int i = 1; i <= n; ++i) {
        P[(size_t)(i - 1) * n + (i - 1)] = p[i];
        G[(size_t)(i - 1) * n + (i - 1)] = g[i];
    }
    // column-ascending, lsb-descending: parents are ready when a cell is built
    for (int j = 2; j <= n; ++j)
        for (int i = j - 1; i >= 1; --i) {
            if (!tree.has(i, j)) continue;
            auto [upper, lower] = tree.parents(i, j);
            WireId pu = P[(size_t)(upper.second - 1) * n + (upper.first - 1)];
            WireId gu = G[(size_t)(upper.second - 1) * n + (upper.first - 1)];
            WireId pl = P[(size_t)(lower.second - 1) * n + (lower.first - 1)];
            WireId gl = G[(size_t)(lower.second - 1) * n + (lower.first - 1)];
            P[(size_t)(j - 1) * n + (i - 1)] = nl.emit(GateKind::And, pl, pu);
            WireId t = nl.emit(GateKind::And, gl, pu);
            G[(size_t)(j - 1) * n + (i - 1)] = nl.emit(GateKind::Or, t, gu);
        }
    PrefixAdderWires out;
    out.sum.resize((size_t)n);
    for (int i = 1; i <= n; ++i) {
        WireId carry_in = (i == 1) ? Netlist::kZero : G[(size_t)(i - 2) * n + 0];
        out.sum[(size_t)i - 1] = nl.emit(GateKind::Xor, p[i], carry_in);
    }
    out.carry_out = G[(size_t)(n - 1) * n + 0];
    return out;
}

} // namespace

Netlist build_adder_netlist(const PrefixTree& tree) {
    if (!tree.is_legal()) throw IllegalTree("adder netlist requires a legal prefix tree");
    const int n = tree.width();
    Netlist nl;
    int pa = nl.add_input("a", n);
    int pb = nl.add_input("b", n);
    std::vector<WireId> a, b;
    for (int k = 0; k < n; ++k) {
        a.push_back(nl.input_wire(pa, k));
        b.push_back(nl.input_wire(pb, k));
    }
    PrefixAdderWires w = emit_prefix_adder(nl, tree, a, b);
    nl.bind_output("sum", w.sum);
    nl.bind_output("cout", {w.carry_out});
    return nl;
}

namespace {

struct FaOut {
    WireId sum;
    WireId carry;
};

// two half adders plus an OR: sum path 2 gates, carry path 3 from the
// addends, 2 from the carry input
FaOut emit_full_adder(Netlist& nl, WireId x, WireId y, WireId cin) {
    WireId s1 = nl.emit(GateKind::Xor, x, y);
    WireId c1 = nl.emit(GateKind::And, x, y);
    WireId s = nl.emit(GateKind::Xor, s1, cin);
    WireId c2 = nl.emit(GateKind::And, s1, cin);
    WireId c = nl.emit(GateKind::Or, c1, c2);
    return {s, c};
}

FaOut emit_half_adder(Netlist& nl, WireId x, WireId y) {
    WireId s = nl.emit(GateKind::Xor, x, y);
    WireId c = nl.emit(GateKind::And, x, y);
    return {s, c};
}

} // namespace

Netlist build_multiplier_netlist(const CompressorState& state, const PrefixTree& adder) {
    if (!state.terminal()) throw NotTerminal("multiplier netlist needs a terminal state");
    const int n = state.width();
    if (adder.width() != 2 * n) throw WidthMismatch("multiplier adder must be 2N bits wide");
    if (!adder.is_legal()) throw IllegalTree("multiplier adder tree is illegal");

    Netlist nl;
    int px = nl.add_input("x", n);
    int py = nl.add_input("y", n);

    // wire columns mirror the compressor replay exactly
    std::vector<std::vector<WireId>> wires(2 * (size_t)n - 1);
    for (int c = 0; c <= 2 * n - 2; ++c)
        for (int p = std::max(0, c - (n - 1)); p <= std::min(c, n - 1); ++p)
            wires[(size_t)c].push_back(
                nl.emit(GateKind::And, nl.input_wire(px, p), nl.input_wire(py, c - p)));

    CompressorState replay = CompressorState::initial(n);
    for (CompressKind kind : state.actions()) {
        CompressPick pick = replay.plan(kind);
        auto& col = wires[(size_t)pick.digit];
        FaOut out{};
        if (kind == CompressKind::FA) {
            out = emit_full_adder(nl, col[(size_t)pick.indices[0]], col[(size_t)pick.indices[1]],
                                  col[(size_t)pick.indices[2]]);
        } else {
            out = emit_half_adder(nl, col[(size_t)pick.indices[0]], col[(size_t)pick.indices[1]]);
        }
        std::array<int, 3> idx = pick.indices;
        std::sort(idx.begin(), idx.begin() + pick.arity, std::greater<int>());
        for (int p = 0; p < pick.arity; ++p)
            col.erase(col.begin() + idx[p]);
        col.push_back(out.sum);
        if ((size_t)pick.digit + 1 >= wires.size()) wires.emplace_back();
        wires[(size_t)pick.digit + 1].push_back(out.carry);
        replay.apply(pick);
    }

    // first remaining bit per column -> operand X, second -> operand Y;
    // bits at weight >= 2N are constant zero by value conservation and drop
    std::vector<WireId> xa(2 * (size_t)n, Netlist::kZero), yb(2 * (size_t)n, Netlist::kZero);
    for (size_t c = 0; c < wires.size() && c < 2 * (size_t)n; ++c) {
        if (!wires[c].empty()) xa[c] = wires[c][0];
        if (wires[c].size() >= 2) yb[c] = wires[c][1];
    }
    PrefixAdderWires w = emit_prefix_adder(nl, adder, xa, yb);
    nl.bind_output("product", w.sum); // adder carry-out is always 0 here
    return nl;
}

std::string VerifyReport::to_json() const {
    nlohmann::json j{{"design", design}, {"mode", mode}, {"vectors", vectors}, {"pass", pass}};
    if (counterexample)
        j["counterexample"] = {{"a", counterexample->first}, {"b", counterexample->second}};
    return j.dump();
}

namespace {

struct Batch {
    std::vector<uint64_t> a, b;
    int lanes = 0;
};

// runs packed batches [first, last) produced by gen, compares against expect
template <class Gen, class Check>
std::optional<std::pair<uint64_t, uint64_t>>
run_batches(const Netlist& nl, uint64_t vectors, int jobs, const Gen& gen, const Check& check) {
    uint64_t batches = (vectors + 63) / 64;
    jobs = std::max(1, jobs);
    std::vector<std::optional<std::pair<uint64_t, uint64_t>>> found((size_t)jobs);
    std::vector<uint64_t> found_at((size_t)jobs, ~0ULL);
    auto worker = [&](int id) {
        for (uint64_t batch = (uint64_t)id; batch < batches; batch += (uint64_t)jobs) {
            Batch in = gen(batch);
            auto cx = check(nl, in, batch);
            if (cx) {
                if (batch < found_at[(size_t)id]) {
                    found_at[(size_t)id] = batch;
                    found[(size_t)id] = cx;
                }
                return;
            }
        }
    };
    if (jobs == 1) {
        worker(0);
    } else {
        std::vector<std::thread> threads;
        for (int t = 0; t < jobs; ++t) threads.emplace_back(worker, t);
        for (auto& t : threads) t.join();
    }
    // earliest batch wins so reports are deterministic across job counts
    std::optional<std::pair<uint64_t, uint64_t>> best;
    uint64_t best_at = ~0ULL;
    for (int t = 0; t < jobs; ++t)
        if (found[(size_t)t] && found_at[(size_t)t] < best_at) {
            best_at = found_at[(size_t)t];
            best = found[(size_t)t];
        }
    return best;
}

std::vector<std::vector<uint64_t>> pack_operands(const Batch& in, int bits) {
    std::vector<std::vector<uint64_t>> values(2);
    values[0].resize((size_t)bits);
    values[1].resize((size_t)bits);
    for (int k = 0; k < bits; ++k) {
        uint64_t wa = 0, wb = 0;
        for (int lane = 0; lane < in.lanes; ++lane) {
            wa |= ((in.a[(size_t)lane] >> k) & 1) << lane;
            wb |= ((in.b[(size_t)lane] >> k) & 1) << lane;
        }
        values[0][(size_t)k] = wa;
        values[1][(size_t)k] = wb;
    }
    return values;
}

} // namespace

VerifyReport verify_adder(const PrefixTree& tree, const VerifyMode& mode, int jobs) {
    const int n = tree.width();
    Netlist nl = build_adder_netlist(tree);
    VerifyReport report;
    report.design = tree.serialize();
    report.mode = mode.exhaustive ? "exhaustive" : "random";

    uint64_t vectors;
    if (mode.exhaustive) {
        if (2 * n > 26) throw std::invalid_argument("exhaustive verify capped at 2^26 vectors");
        vectors = 1ULL << (2 * n);
    } else {
        vectors = mode.random_count;
    }
    report.vectors = vectors;

    uint64_t opmask = (n == 64) ? ~0ULL : ((1ULL << n) - 1);
    auto gen = [&](uint64_t batch) {
        Batch in;
        in.lanes = (int)std::min<uint64_t>(64, vectors - batch * 64);
        in.a.resize((size_t)in.lanes);
        in.b.resize((size_t)in.lanes);
        if (mode.exhaustive) {
            for (int lane = 0; lane < in.lanes; ++lane) {
                uint64_t v = batch * 64 + (uint64_t)lane;
                in.a[(size_t)lane] = v & opmask;
                in.b[(size_t)lane] = v >> n;
            }
        } else {
            Rng rng(Rng::derive(mode.seed, batch));
            for (int lane = 0; lane < in.lanes; ++lane) {
                in.a[(size_t)lane] = rng.next() & opmask;
                in.b[(size_t)lane] = rng.next() & opmask;
            }
        }
        return in;
    };
    auto check = [&](const Netlist& net, const Batch& in,
                     uint64_t) -> std::optional<std::pair<uint64_t, uint64_t>> {
        auto out = net.simulate(pack_operands(in, n));
        for (int lane = 0; lane < in.lanes; ++lane) {
            uint64_t sum = 0;
            for (int k = 0; k < n; ++k) sum |= ((out[0][(size_t)k] >> lane) & 1) << k;
            uint64_t cout = (out[1][0] >> lane) & 1;
            unsigned __int128 want = (unsigned __int128)in.a[(size_t)lane] + in.b[(size_t)lane];
            uint64_t want_sum = (uint64_t)(want & opmask);
            uint64_t want_cout = (uint64_t)(want >> n) & 1;
            if (sum != want_sum || cout != want_cout)
                return std::pair<uint64_t, uint64_t>{in.a[(size_t)lane], in.b[(size_t)lane]};
        }
        return std::nullopt;
    };
    auto cx = run_batches(nl, vectors, jobs, gen, check);
    report.pass = !cx.has_value();
    report.counterexample = cx;
    return report;
}

VerifyReport verify_multiplier(const CompressorState& state, const PrefixTree& adder,
                               const VerifyMode& mode, int jobs) {
    const int n = state.width();
    Netlist nl = build_multiplier_netlist(state, adder);
    VerifyReport report;
    report.design = state.serialize() + adder.serialize();
    report.mode = mode.exhaustive ? "exhaustive" : "random";

    uint64_t vectors;
    if (mode.exhaustive) {
        if (2 * n > 26) throw std::invalid_argument("exhaustive verify capped at 2^26 vectors");
        vectors = 1ULL << (2 * n);
    } else {
        vectors = mode.random_count;
    }
    report.vectors = vectors;

    uint64_t opmask = (n == 64) ? ~0ULL : ((1ULL << n) - 1);
    auto gen = [&](uint64_t batch) {
        Batch in;
        in.lanes = (int)std::min<uint64_t>(64, vectors - batch * 64);
        in.a.resize((size_t)in.lanes);
        in.b.resize((size_t)in.lanes);
        if (mode.exhaustive) {
            for (int lane = 0; lane < in.lanes; ++lane) {
                uint64_t v = batch * 64 + (uint64_t)lane;
                in.a[(size_t)lane] = v & opmask;
                in.b[(size_t)lane] = v >> n;
            }
        } else {
            Rng rng(Rng::derive(mode.seed, batch));
            for (int lane = 0; lane < in.lanes; ++lane) {
                in.a[(size_t)lane] = rng.next() & opmask;
                in.b[(size_t)lane] = rng.next() & opmask;
            }
        }
        return in;
    };
    auto check = [&](const Netlist& net, const Batch& in,
                     uint64_t) -> std::optional<std::pair<uint64_t, uint64_t>> {
        auto out = net.simulate(pack_operands(in, n));
        for (int lane = 0; lane < in.lanes; ++lane) {
            unsigned __int128 prod = 0;
            for (int k = 0; k < 2 * n; ++k)
                prod |= (unsigned __int128)((out[0][(size_t)k] >> lane) & 1) << k;
            unsigned __int128 want =
                (unsigned __int128)in.a[(size_t)lane] * in.b[(size_t)lane];
            if (prod != want)
                return std::pair<uint64_t, uint64_t>{in.a[(size_t)lane], in.b[(size_t)lane]};
        }
        return std::nullopt;
    };
    auto cx = run_batches(nl, vectors, jobs, gen, check);
    report.pass = !cx.has_value();
    report.counterexample = cx;
    return report;
}

namespace {

std::string wire_ref(const Netlist& nl, WireId w) {
    if (w == Netlist::kZero) return "1'b0";
    for (const Port& p : nl.inputs())
        for (size_t k = 0; k < p.wires.size(); ++k)
            if (p.wires[k] == w) {
                if (p.wires.size() == 1) return p.name;
                return p.name + "[" + std::to_string(k) + "]";
            }
    return "w" + std::to_string(w);
}

} // namespace

std::string emit_verilog(const Netlist& nl, const std::string& module_name) {
    if (module_name.empty() || (!std::isalpha((unsigned char)module_name[0]) && module_name[0] != '_'))
        throw InvalidModuleName("module name must start with a letter or underscore");
    for (char c : module_name)
        if (!std::isalnum((unsigned char)c) && c != '_' && c != '$')
            throw InvalidModuleName("module name contains an invalid character");

    std::string v;
    v += "module " + module_name + "(\n";
    bool first = true;
    for (const Port& p : nl.inputs()) {
        v += first ? "  " : ",\n  ";
        first = false;
        if (p.wires.size() == 1) v += "input " + p.name;
        else v += "input [" + std::to_string(p.wires.size() - 1) + ":0] " + p.name;
    }
    for (const Port& p : nl.outputs()) {
        v += first ? "  " : ",\n  ";
        first = false;
        if (p.wires.size() == 1) v += "output " + p.name;
        else v += "output [" + std::to_string(p.wires.size() - 1) + ":0] " + p.name;
    }
    v += "\n);\n";

    for (size_t g = 0; g < nl.gates().size(); ++g)
        v += "  wire w" + std::to_string(nl.gate_wire(g)) + ";\n";

    for (size_t g = 0; g < nl.gates().size(); ++g) {
        const Gate& gate = nl.gates()[g];
        std::string lhs = "w" + std::to_string(nl.gate_wire(g));
        std::string rhs;
        switch (gate.kind) {
        case GateKind::And: rhs = wire_ref(nl, gate.a) + " & " + wire_ref(nl, gate.b); break;
        case GateKind::Or: rhs = wire_ref(nl, gate.a) + " | " + wire_ref(nl, gate.b); break;
        case GateKind::Xor: rhs = wire_ref(nl, gate.a) + " ^ " + wire_ref(nl, gate.b); break;
        case GateKind::Not: rhs = "~" + wire_ref(nl, gate.a); break;
        case GateKind::Const0: rhs = "1'b0"; break;
        }
        v += "  assign " + lhs + " = " + rhs + ";\n";
    }

    for (const Port& p : nl.outputs()) {
        if (p.wires.size() == 1) {
            v += "  assign " + p.name + " = " + wire_ref(nl, p.wires[0]) + ";\n";
        } else {
            for (size_t k = 0; k < p.wires.size(); ++k)
                v += "  assign " + p.name + "[" + std::to_string(k) + "] = " +
                     wire_ref(nl, p.wires[k]) + ";\n";
        }
    }
    v += "endmodule\n";
    return v;
}

} // namespace arith
