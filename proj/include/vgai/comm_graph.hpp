#pragma once

#include <string_view>
#include <utility>
#include <vector>

#include "vgai/types.hpp"

namespace vgai {

// Undirected radius graph over agents. Neighbor lists are sorted ascending.
class CommGraph {
 public:
  CommGraph() = default;
  explicit CommGraph(int n) : neighbors_(static_cast<std::size_t>(n)) {}

  int size() const { return static_cast<int>(neighbors_.size()); }
  const std::vector<int>& neighbors(int i) const { return neighbors_[static_cast<std::size_t>(i)]; }
  int degree(int i) const { return static_cast<int>(neighbors(i).size()); }
  bool has_edge(int i, int j) const;
  std::size_t edge_count() const;
  // Unordered pairs with i < j.
  std::vector<std::pair<int, int>> edges() const;

  // Adds the undirected edge (i, j); self-loops and duplicates are rejected.
  void add_edge(int i, int j);

  // Component label per agent, labels numbered from 0 in order of first agent.
  std::vector<int> components() const;
  bool connected() const;

 private:
  std::vector<std::vector<int>> neighbors_;
};

// Edge iff ||r_i - r_j|| <= radius.
CommGraph build_graph(const Points& positions, double radius);

enum class GsoNormalization { kDegree, kAdjacency, kSymmetric };

GsoNormalization parse_gso_normalization(std::string_view tag);
std::string_view to_string(GsoNormalization normalization);

// Graph shift operator. weights(i, j) != 0 only when j is a neighbor of i.
struct GsoMatrix {
  Matrix weights;
  GsoNormalization normalization = GsoNormalization::kDegree;

  int size() const { return static_cast<int>(weights.rows()); }
};

// kDegree: s_ij = 1 / max(deg_i, 1); kAdjacency: s_ij = 1;
// kSymmetric: s_ij = 1 / sqrt(deg_i deg_j).
GsoMatrix gso(const CommGraph& graph, GsoNormalization normalization = GsoNormalization::kDegree);

// [S X]_if = sum over neighbors j of s_ij x_jf.
Matrix shift(const GsoMatrix& s, const Matrix& x);

// Delayed aggregation sequence Z(t) = [X(t), S(t)X(t-1), ..., S(t)...S(t-K+2)X(t-K+1)].
// Block k is kept between steps so each update costs one shift per block.
class AggregationBuffer {
 public:
  AggregationBuffer(int depth, int n_agents, int features);

  int depth() const { return depth_; }
  int agents() const { return agents_; }
  int features() const { return features_; }
  long steps() const { return steps_; }

  const Matrix& block(int k) const { return blocks_[static_cast<std::size_t>(k)]; }
  // N x (K F), blocks side by side.
  Matrix sequence() const;
  // Row i of sequence().
  Vector row(int agent) const;

  // Throws std::invalid_argument when S or X disagree with the buffer shape.
  void update(const GsoMatrix& s, const Matrix& x);

 private:
  int depth_;
  int agents_;
  int features_;
  long steps_ = 0;
  std::vector<Matrix> blocks_;
};

// Functional form: returns the buffer advanced by one step.
AggregationBuffer update_aggregation(const AggregationBuffer& buffer, const GsoMatrix& s, const Matrix& x);

// Per-agent executor for the same recursion. Each agent only stores its own
// block rows; in every exchange round it publishes blocks 0..K-2 and reads the
// messages of its current neighbors, weighted by its own GSO row.
class MessagePassingNetwork {
 public:
  // What agent j sends: its blocks 0..K-2 from the previous step.
  struct Message {
    int sender = -1;
    std::vector<Vector> blocks;
  };

  // Read-only view an agent gets during a round: its inbox, nothing else.
  class AgentContext {
   public:
    int id() const { return id_; }
    const std::vector<std::pair<double, const Message*>>& inbox() const { return inbox_; }

   private:
    friend class MessagePassingNetwork;
    int id_ = -1;
    std::vector<std::pair<double, const Message*>> inbox_;
  };

  MessagePassingNetwork(int depth, int n_agents, int features);

  // One synchronous step: exchange round over the graph, then each agent
  // folds its inbox into its blocks and stores its fresh local state x_i.
  void step(const CommGraph& graph, const GsoMatrix& s, const Matrix& x);

  // z_i(t) held by agent i.
  Vector aggregation(int agent) const;
  Matrix sequence() const;

  long rounds() const { return rounds_; }
  long messages_delivered() const { return messages_; }

 private:
  Message publish(int agent) const;
  void absorb(int agent, const AgentContext& context, const Eigen::Ref<const Vector>& x);

  int depth_;
  int features_;
  std::vector<std::vector<Vector>> local_blocks_;  // [agent][k]
  long rounds_ = 0;
  long messages_ = 0;
};

}  // namespace vgai
