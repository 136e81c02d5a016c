#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "teid/graph.hpp"
#include "teid/random.hpp"

// Small reference diagrams used by the test suites and the oracle command.
namespace teid::models {

// U confounds every observed variable; Z -> X -> Y, W -> Y. The effect of X
// on Y passes the latent-confounder criterion with z = Z, w = W, T = {}.
// Without W -> Y the model is an ordinary identified single-factor model.
inline Dag latent_confounder(bool w_to_y = true) {
  std::vector<Edge> edges{{"U", "Z"}, {"U", "W"}, {"U", "X"}, {"U", "Y"}, {"Z", "X"}, {"X", "Y"}};
  if (w_to_y) edges.emplace_back("W", "Y");
  return Dag({{"U", VertexKind::Latent},
              {"Z", VertexKind::Observed},
              {"W", VertexKind::Observed},
              {"X", VertexKind::Observed},
              {"Y", VertexKind::Observed}},
             edges);
}

// Z -> X -> Y with selection S <- {Z, Y, W}. Passes the selection criterion
// with z = Z, w = W, T = {}, aux = S. `w_to_y` adds W -> Y; with T = {} the
// criterion still holds, since Y and S stay unconditioned colliders.
inline Dag selection_collider(bool w_to_y = false) {
  std::vector<Edge> edges{{"Z", "X"}, {"X", "Y"}, {"Z", "S"}, {"Y", "S"}, {"W", "S"}};
  if (w_to_y) edges.emplace_back("W", "Y");
  return Dag({{"Z", VertexKind::Observed},
              {"W", VertexKind::Observed},
              {"X", VertexKind::Observed},
              {"Y", VertexKind::Observed},
              {"S", VertexKind::Selection}},
             edges);
}

// Latent U confounds X, Y and three indicators A1..A3; selection S depends on
// Y and three independent causes B1..B3. Every step of the combined pipeline
// goes through for the effect of X on Y.
inline Dag latent_and_selection() {
  return Dag({{"U", VertexKind::Latent},
              {"A1", VertexKind::Observed},
              {"A2", VertexKind::Observed},
              {"A3", VertexKind::Observed},
              {"B1", VertexKind::Observed},
              {"B2", VertexKind::Observed},
              {"B3", VertexKind::Observed},
              {"X", VertexKind::Observed},
              {"Y", VertexKind::Observed},
              {"S", VertexKind::Selection}},
             {{"U", "A1"}, {"U", "A2"}, {"U", "A3"}, {"U", "X"}, {"U", "Y"}, {"X", "Y"},
              {"Y", "S"}, {"B1", "S"}, {"B2", "S"}, {"B3", "S"}});
}

// Two latent factors. U1 loads on A1..A3 and U2 on B1..B3. With `bridge`,
// observed X (child of U1) and Y (child of U2 and X) join the picture.
inline Dag two_factor(bool bridge = true) {
  std::vector<Vertex> v{{"U1", VertexKind::Latent},   {"U2", VertexKind::Latent},   {"A1", VertexKind::Observed},
                        {"A2", VertexKind::Observed}, {"A3", VertexKind::Observed}, {"B1", VertexKind::Observed},
                        {"B2", VertexKind::Observed}, {"B3", VertexKind::Observed}};
  std::vector<Edge> e{{"U1", "A1"}, {"U1", "A2"}, {"U1", "A3"}, {"U2", "B1"}, {"U2", "B2"}, {"U2", "B3"}};
  if (bridge) {
    v.push_back({"X", VertexKind::Observed});
    v.push_back({"Y", VertexKind::Observed});
    e.insert(e.end(), {{"U1", "X"}, {"U2", "Y"}, {"X", "Y"}});
  }
  return Dag(v, e);
}

// Random DAG over V0..V{n-1} (all observed): each forward pair of a random
// permutation gets an edge with probability `density`.
inline Dag random_dag(std::uint64_t seed, std::size_t n, double density = 0.4) {
  Rng rng(seed);
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  std::vector<Vertex> vertices;
  for (std::size_t i = 0; i < n; ++i) vertices.push_back({"V" + std::to_string(i), VertexKind::Observed});
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.coin(density)) edges.emplace_back(vertices[perm[i]].name, vertices[perm[j]].name);
  return Dag(vertices, edges);
}

}  // namespace teid::models
