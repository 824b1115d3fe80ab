#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "arith/compressor_tree.hpp"
#include "arith/errors.hpp"
#include "arith/prefix_tree.hpp"

namespace arith {

enum class GateKind : uint8_t { And, Or, Xor, Not, Const0 };

using WireId = int32_t;

struct Gate {
    GateKind kind;
    WireId a = -1;
    WireId b = -1;
};

struct Port {
    std::string name;
    std::vector<WireId> wires;
};

// Gate-level combinational graph. Wire 0 is a built-in constant zero; input
// bits follow, then one wire per gate in emission order, which makes the gate
// list topological by construction. Immutable once built.
class Netlist {
public:
    Netlist() = default;

    static constexpr WireId kZero = 0;

    int add_input(const std::string& name, int bits);
    WireId input_wire(int port, int bit) const { return inputs_[port].wires[bit]; }
    WireId emit(GateKind kind, WireId a = -1, WireId b = -1);
    void bind_output(const std::string& name, std::vector<WireId> wires);

    const std::vector<Port>& inputs() const { return inputs_; }
    const std::vector<Port>& outputs() const { return outputs_; }
    const std::vector<Gate>& gates() const { return gates_; }
    std::vector<Gate>& mutable_gates() { return gates_; } // for fault-injection tests
    int wire_count() const { return wire_count_; }
    WireId gate_wire(size_t g) const { return first_gate_wire_ + (WireId)g; }

    // Packed evaluation of up to 64 test vectors per call: values[p][k] holds
    // the bit-sliced vector batch for input port p, bit k. Throws UnboundInput
    // when a port batch is missing or badly shaped.
    std::vector<std::vector<uint64_t>>
    simulate(const std::vector<std::vector<uint64_t>>& input_values) const;

private:
    std::vector<Port> inputs_;
    std::vector<Port> outputs_;
    std::vector<Gate> gates_;
    int wire_count_ = 1; // constant-zero wire
    WireId first_gate_wire_ = 1;
    bool sealed_inputs_ = false;
};

// p_i = a_i XOR b_i, g_i = a_i AND b_i, three gates per merge cell, one XOR
// per sum bit. Ports: a, b -> sum, cout. Gate count is exactly 3N + 3*size.
Netlist build_adder_netlist(const PrefixTree& tree); // throws IllegalTree

// N^2 partial-product AND gates, FA/HA networks replayed from the action
// sequence with the shared lowest-delay input selection, then the 2N-bit
// prefix adder. Ports: x, y -> product. FA is two half adders plus an OR.
Netlist build_multiplier_netlist(const CompressorState& state,
                                 const PrefixTree& adder); // NotTerminal, WidthMismatch

struct VerifyReport {
    std::string design;
    std::string mode; // "exhaustive" | "random"
    uint64_t vectors = 0;
    bool pass = false;
    std::optional<std::pair<uint64_t, uint64_t>> counterexample;
    std::string to_json() const;
};

struct VerifyMode {
    bool exhaustive = true;
    uint64_t random_count = 0;
    uint64_t seed = 0;
    static VerifyMode Exhaustive() { return {true, 0, 0}; }
    static VerifyMode Random(uint64_t count, uint64_t seed) { return {false, count, seed}; }
};

// Compares the netlist against integer arithmetic; packed 64 vectors per
// pass, batches split across jobs threads. Exhaustive mode is capped at 2^26
// total vectors.
VerifyReport verify_adder(const PrefixTree& tree, const VerifyMode& mode, int jobs = 1);
VerifyReport verify_multiplier(const CompressorState& state, const PrefixTree& adder,
                               const VerifyMode& mode, int jobs = 1);

// Structural continuous-assignment form, one assign per gate, wires named by
// index. Byte-identical for identical netlists; ordering is part of the
// contract.
std::string emit_verilog(const Netlist& netlist, const std::string& module_name);

} // namespace arith
