#include "rscw/code.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <stdexcept>

namespace rscw {

namespace {

// Corner sweep orders for the four-step CNOT schedule.  Offsets are
// (dr, dc) from the plaquette corner (pr, pc) to a data qubit.
// X ancillas: NW, NE, SW, SE — the last two form a horizontal segment,
// perpendicular to the vertical logical X.
// Z ancillas: NW, SW, NE, SE — the last two form a vertical segment,
// perpendicular to the horizontal logical Z.
constexpr std::array<std::pair<int, int>, 4> kXSweep = {
    {{-1, -1}, {-1, 0}, {0, -1}, {0, 0}}};
constexpr std::array<std::pair<int, int>, 4> kZSweep = {
    {{-1, -1}, {0, -1}, {-1, 0}, {0, 0}}};

}  // namespace

RscCode RscCode::build(int distance) {
  if (distance < 3 || distance > 15 || distance % 2 == 0)
    throw std::invalid_argument(
        "Distance must be an odd integer between 3 and 15");

  RscCode code;
  code.distance_ = distance;
  const int L = distance;
  auto qubit_index = [L](int r, int c) { return r * L + c; };
  auto on_lattice = [L](int r, int c) {
    return r >= 0 && r < L && c >= 0 && c < L;
  };

  // Enumerate plaquettes.  A weight-4 plaquette is always a stabilizer; a
  // weight-2 plaquette survives only on the boundary side owned by its type.
  for (int pr = 0; pr <= L; ++pr) {
    for (int pc = 0; pc <= L; ++pc) {
      Stabilizer s;
      s.type = ((pr + pc) % 2 == 0) ? StabType::X : StabType::Z;
      s.pr = pr;
      s.pc = pc;
      for (int dr = -1; dr <= 0; ++dr)
        for (int dc = -1; dc <= 0; ++dc)
          if (on_lattice(pr + dr, pc + dc))
            s.qubits.push_back(qubit_index(pr + dr, pc + dc));
      std::sort(s.qubits.begin(), s.qubits.end());
      if (s.qubits.size() == 4) {
        code.stabs_[static_cast<int>(s.type)].push_back(std::move(s));
      } else if (s.qubits.size() == 2) {
        const bool top_bottom = (pr == 0 || pr == L);
        const bool left_right = (pc == 0 || pc == L);
        if ((top_bottom && s.type == StabType::X) ||
            (left_right && s.type == StabType::Z))
          code.stabs_[static_cast<int>(s.type)].push_back(std::move(s));
      }
    }
  }

  const int n = L * L;
  for (int ti = 0; ti < 2; ++ti) {
    auto& stabs = code.stabs_[ti];
    std::sort(stabs.begin(), stabs.end(),
              [](const Stabilizer& a, const Stabilizer& b) {
                return std::pair(a.pr, a.pc) < std::pair(b.pr, b.pc);
              });
    const StabType t = static_cast<StabType>(ti);
    const Pauli p = (t == StabType::X) ? Pauli::X : Pauli::Z;

    for (const auto& s : stabs) {
      PauliOperator op(n);
      for (int q : s.qubits) op.apply(q, p);
      code.stab_paulis_[ti].push_back(std::move(op));

      std::array<int, 4> steps;
      const auto& sweep = (t == StabType::X) ? kXSweep : kZSweep;
      for (int step = 0; step < 4; ++step) {
        const int r = s.pr + sweep[step].first;
        const int c = s.pc + sweep[step].second;
        steps[step] = on_lattice(r, c) ? qubit_index(r, c) : -1;
      }
      code.schedule_[ti].push_back(steps);
    }
  }

  // Logical representatives: X down column 0, Z along row 0.
  PauliOperator xl(n), zl(n);
  for (int r = 0; r < L; ++r) xl.apply(qubit_index(r, 0), Pauli::X);
  for (int c = 0; c < L; ++c) zl.apply(qubit_index(0, c), Pauli::Z);
  code.logicals_[static_cast<int>(StabType::X)] = std::move(xl);
  code.logicals_[static_cast<int>(StabType::Z)] = std::move(zl);

  // Grid embedding: X stabilizers occupy every plaquette row 0..L with
  // (L-1)/2 entries per row; Z stabilizers occupy rows 1..L-1 with (L+1)/2
  // entries per row.  Columns are ranked by pc within the row.
  code.grid_shape_[static_cast<int>(StabType::X)] = {L + 1, (L - 1) / 2};
  code.grid_shape_[static_cast<int>(StabType::Z)] = {L - 1, (L + 1) / 2};
  for (int ti = 0; ti < 2; ++ti) {
    const auto& stabs = code.stabs_[ti];
    std::map<int, int> rank_in_row;
    for (const auto& s : stabs) rank_in_row[s.pr] = 0;
    for (std::size_t k = 0; k < stabs.size(); ++k) {
      const int row = stabs[k].pr - (static_cast<StabType>(ti) == StabType::Z);
      code.grid_pos_[ti].push_back({row, rank_in_row[stabs[k].pr]++});
    }
  }

  return code;
}

BitVec syndrome(const RscCode& code, const PauliOperator& e, StabType t) {
  const int m = code.n_stabilizers(t);
  BitVec s(m);
  for (int k = 0; k < m; ++k)
    if (commutation(e, code.stabilizer_pauli(t, k))) s.set(k);
  return s;
}

PureErrorTable build_pure_error_table(const RscCode& code, StabType t) {
  const int m = code.n_stabilizers(t);
  const int n = code.n_data();
  const auto& stabs = code.stabilizers(t);

  // Matching graph of one type: each data qubit links the (at most two)
  // type-t stabilizers containing it, or a stabilizer to the boundary.
  std::vector<std::vector<int>> owners(n);
  for (int k = 0; k < m; ++k)
    for (int q : stabs[k].qubits) owners[q].push_back(k);

  std::vector<std::vector<std::pair<int, int>>> adj(m);  // (neighbor, qubit)
  std::vector<int> boundary_qubit(m, -1);                // lowest, or -1
  for (int q = 0; q < n; ++q) {
    if (owners[q].size() == 2) {
      adj[owners[q][0]].push_back({owners[q][1], q});
      adj[owners[q][1]].push_back({owners[q][0], q});
    } else if (owners[q].size() == 1) {
      int k = owners[q][0];
      if (boundary_qubit[k] < 0) boundary_qubit[k] = q;
    }
  }

  // Breadth-first distances from the boundary.
  constexpr int kInf = std::numeric_limits<int>::max();
  std::vector<int> dist(m, kInf);
  std::vector<int> frontier;
  for (int k = 0; k < m; ++k)
    if (boundary_qubit[k] >= 0) {
      dist[k] = 1;
      frontier.push_back(k);
    }
  while (!frontier.empty()) {
    std::vector<int> next;
    for (int u : frontier)
      for (auto [v, q] : adj[u])
        if (dist[v] == kInf) {
          dist[v] = dist[u] + 1;
          next.push_back(v);
        }
    frontier = std::move(next);
  }

  PureErrorTable table;
  table.type = t;
  table.distance = code.distance();
  table.rows.assign(m, BitVec(n));

  std::vector<int> order(m);
  for (int k = 0; k < m; ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return std::pair(dist[a], a) < std::pair(dist[b], b);
  });
  for (int k : order) {
    if (dist[k] == kInf)
      throw std::runtime_error("disconnected matching graph");
    if (dist[k] == 1) {
      table.rows[k].set(boundary_qubit[k]);
      continue;
    }
    // Extend the shortest chain of the parent with the lowest qubit index.
    int best_q = -1, best_v = -1;
    for (auto [v, q] : adj[k])
      if (dist[v] == dist[k] - 1 && (best_q < 0 || q < best_q)) {
        best_q = q;
        best_v = v;
      }
    table.rows[k] = table.rows[best_v];
    table.rows[k].flip(best_q);
  }
  return table;
}

PauliOperator combine_error(const RscCode& code, const PureErrorTable& table,
                            int class_bit, const BitVec& s) {
  const int m = code.n_stabilizers(table.type);
  if (static_cast<int>(s.size()) != m)
    throw std::invalid_argument("syndrome length mismatch");
  if (class_bit != 0 && class_bit != 1)
    throw std::invalid_argument("class bit must be 0 or 1");

  BitVec acc(code.n_data());
  for (int k = 0; k < m; ++k)
    if (s.get(k)) acc ^= table.rows[k];

  PauliOperator e(code.n_data());
  const PauliOperator& rep = code.logical(opposite(table.type));
  if (table.type == StabType::X) {
    e.z_bits = acc;
    if (class_bit) e.z_bits ^= rep.z_bits;
  } else {
    e.x_bits = acc;
    if (class_bit) e.x_bits ^= rep.x_bits;
  }
  return e;
}

int homology_class(const RscCode& code, const PauliOperator& residual,
                   StabType t) {
  if (syndrome(code, residual, t).any())
    throw std::invalid_argument(
        "homology class requires a type-syndrome-free residual");
  return commutation(residual, code.logical(t));
}

}  // namespace rscw
