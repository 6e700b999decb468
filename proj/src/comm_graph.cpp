#include "vgai/comm_graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace vgai {

bool CommGraph::has_edge(int i, int j) const {
  const auto& n = neighbors(i);
  return std::binary_search(n.begin(), n.end(), j);
}

std::size_t CommGraph::edge_count() const {
  std::size_t total = 0;
  for (const auto& n : neighbors_) total += n.size();
  return total / 2;
}

std::vector<std::pair<int, int>> CommGraph::edges() const {
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < size(); ++i) {
    for (int j : neighbors(i)) {
      if (i < j) out.emplace_back(i, j);
    }
  }
  return out;
}

void CommGraph::add_edge(int i, int j) {
  if (i == j) throw std::invalid_argument("CommGraph: self-loop");
  if (i < 0 || j < 0 || i >= size() || j >= size()) throw std::out_of_range("CommGraph: agent index");
  if (has_edge(i, j)) return;
  auto insert = [](std::vector<int>& list, int v) { list.insert(std::lower_bound(list.begin(), list.end(), v), v); };
  insert(neighbors_[static_cast<std::size_t>(i)], j);
  insert(neighbors_[static_cast<std::size_t>(j)], i);
}

std::vector<int> CommGraph::components() const {
  std::vector<int> label(neighbors_.size(), -1);
  std::vector<int> stack;
  int next = 0;
  for (int start = 0; start < size(); ++start) {
    if (label[static_cast<std::size_t>(start)] >= 0) continue;
    label[static_cast<std::size_t>(start)] = next;
    stack.push_back(start);
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (int w : neighbors(v)) {
        if (label[static_cast<std::size_t>(w)] < 0) {
          label[static_cast<std::size_t>(w)] = next;
          stack.push_back(w);
        }
      }
    }
    ++next;
  }
  return label;
}

bool CommGraph::connected() const {
  const auto labels = components();
  return std::all_of(labels.begin(), labels.end(), [](int l) { return l == 0; });
}

CommGraph build_graph(const Points& positions, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("build_graph: radius must be positive");
  const int n = static_cast<int>(positions.rows());
  CommGraph graph(n);
  const double r2 = radius * radius;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if ((positions.row(i) - positions.row(j)).squaredNorm() <= r2) graph.add_edge(i, j);
    }
  }
  return graph;
}

GsoNormalization parse_gso_normalization(std::string_view tag) {
  if (tag == "degree") return GsoNormalization::kDegree;
  if (tag == "adjacency") return GsoNormalization::kAdjacency;
  if (tag == "symmetric") return GsoNormalization::kSymmetric;
  throw std::invalid_argument("unknown GSO normalization: " + std::string(tag));
}

std::string_view to_string(GsoNormalization normalization) {
  switch (normalization) {
    case GsoNormalization::kDegree:
      return "degree";
    case GsoNormalization::kAdjacency:
      return "adjacency";
    case GsoNormalization::kSymmetric:
      return "symmetric";
  }
  return "degree";
}

GsoMatrix gso(const CommGraph& graph, GsoNormalization normalization) {
  const int n = graph.size();
  GsoMatrix s{Matrix::Zero(n, n), normalization};
  for (int i = 0; i < n; ++i) {
    const double deg_i = std::max(graph.degree(i), 1);
    for (int j : graph.neighbors(i)) {
      switch (normalization) {
        case GsoNormalization::kDegree:
          s.weights(i, j) = 1.0 / deg_i;
          break;
        case GsoNormalization::kAdjacency:
          s.weights(i, j) = 1.0;
          break;
        case GsoNormalization::kSymmetric:
          s.weights(i, j) = 1.0 / std::sqrt(deg_i * std::max(graph.degree(j), 1));
          break;
      }
    }
  }
  return s;
}

Matrix shift(const GsoMatrix& s, const Matrix& x) {
  if (s.weights.cols() != x.rows()) throw std::invalid_argument("shift: GSO and state dimensions disagree");
  return s.weights * x;
}

AggregationBuffer::AggregationBuffer(int depth, int n_agents, int features)
    : depth_(depth), agents_(n_agents), features_(features) {
  if (depth < 1) throw std::invalid_argument("AggregationBuffer: depth K must be >= 1");
  if (n_agents < 1 || features < 1) throw std::invalid_argument("AggregationBuffer: empty shape");
  blocks_.assign(static_cast<std::size_t>(depth), Matrix::Zero(n_agents, features));
}

Matrix AggregationBuffer::sequence() const {
  Matrix z(agents_, depth_ * features_);
  for (int k = 0; k < depth_; ++k) z.middleCols(k * features_, features_) = block(k);
  return z;
}

Vector AggregationBuffer::row(int agent) const {
  Vector z(depth_ * features_);
  for (int k = 0; k < depth_; ++k) z.segment(k * features_, features_) = block(k).row(agent).transpose();
  return z;
}

void AggregationBuffer::update(const GsoMatrix& s, const Matrix& x) {
  if (x.rows() != agents_ || x.cols() != features_) {
    throw std::invalid_argument("AggregationBuffer: state shape drifted between steps");
  }
  if (s.weights.rows() != agents_ || s.weights.cols() != agents_) {
    throw std::invalid_argument("AggregationBuffer: GSO shape does not match agent count");
  }
  // Highest block first so each shift reads the previous step's block k-1.
  for (int k = depth_ - 1; k >= 1; --k) {
    blocks_[static_cast<std::size_t>(k)] = s.weights * blocks_[static_cast<std::size_t>(k - 1)];
  }
  blocks_[0] = x;
  ++steps_;
}

AggregationBuffer update_aggregation(const AggregationBuffer& buffer, const GsoMatrix& s, const Matrix& x) {
  AggregationBuffer next = buffer;
  next.update(s, x);
  return next;
}

MessagePassingNetwork::MessagePassingNetwork(int depth, int n_agents, int features)
    : depth_(depth), features_(features) {
  if (depth < 1) throw std::invalid_argument("MessagePassingNetwork: depth K must be >= 1");
  local_blocks_.assign(static_cast<std::size_t>(n_agents),
                       std::vector<Vector>(static_cast<std::size_t>(depth), Vector::Zero(features)));
}

MessagePassingNetwork::Message MessagePassingNetwork::publish(int agent) const {
  const auto& own = local_blocks_[static_cast<std::size_t>(agent)];
  return Message{agent, std::vector<Vector>(own.begin(), own.end() - 1)};
}

void MessagePassingNetwork::absorb(int agent, const AgentContext& context, const Eigen::Ref<const Vector>& x) {
  auto& own = local_blocks_[static_cast<std::size_t>(agent)];
  for (int k = 1; k < depth_; ++k) {
    Vector sum = Vector::Zero(features_);
    for (const auto& [weight, message] : context.inbox()) sum += weight * message->blocks[static_cast<std::size_t>(k - 1)];
    own[static_cast<std::size_t>(k)] = std::move(sum);
  }
  own[0] = x;
}

void MessagePassingNetwork::step(const CommGraph& graph, const GsoMatrix& s, const Matrix& x) {
  const int n = static_cast<int>(local_blocks_.size());
  if (graph.size() != n || s.size() != n || x.rows() != n || x.cols() != features_) {
    throw std::invalid_argument("MessagePassingNetwork: shape mismatch");
  }
  std::vector<Message> outbox;
  if (depth_ > 1) {
    outbox.reserve(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) outbox.push_back(publish(j));
    ++rounds_;
  }
  for (int i = 0; i < n; ++i) {
    AgentContext context;
    context.id_ = i;
    if (depth_ > 1) {
      for (int j : graph.neighbors(i)) {
        context.inbox_.emplace_back(s.weights(i, j), &outbox[static_cast<std::size_t>(j)]);
        ++messages_;
      }
    }
    absorb(i, context, x.row(i).transpose());
  }
}

Vector MessagePassingNetwork::aggregation(int agent) const {
  const auto& own = local_blocks_[static_cast<std::size_t>(agent)];
  Vector z(depth_ * features_);
  for (int k = 0; k < depth_; ++k) z.segment(k * features_, features_) = own[static_cast<std::size_t>(k)];
  return z;
}

Matrix MessagePassingNetwork::sequence() const {
  const int n = static_cast<int>(local_blocks_.size());
  Matrix z(n, depth_ * features_);
  for (int i = 0; i < n; ++i) z.row(i) = aggregation(i).transpose();
  return z;
}

}  // namespace vgai
