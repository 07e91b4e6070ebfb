// params.hpp -- ordered named parameter sets shared by the optimizer, the
// checkpoint format and the gradient-check harness.
#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "scwr/graph.hpp"
#include "scwr/tensor.hpp"

namespace scwr {

template <typename T>
struct ParamSet {
  std::vector<std::pair<std::string, TensorT<T>>> items;

  void add(const std::string& name, TensorT<T> t) {
    require(find(name) < 0, "duplicate parameter name: " + name);
    items.emplace_back(name, std::move(t));
  }

  int find(const std::string& name) const {
    for (size_t i = 0; i < items.size(); ++i)
      if (items[i].first == name) return int(i);
    return -1;
  }

  TensorT<T>& get(const std::string& name) {
    int i = find(name);
    require(i >= 0, "unknown parameter: " + name);
    return items[size_t(i)].second;
  }
  const TensorT<T>& get(const std::string& name) const {
    int i = find(name);
    require(i >= 0, "unknown parameter: " + name);
    return items[size_t(i)].second;
  }

  size_t size() const { return items.size(); }

  template <typename U>
  ParamSet<U> cast() const {
    ParamSet<U> out;
    for (const auto& [name, t] : items) out.add(name, t.template cast<U>());
    return out;
  }

  // Zero tensors with matching names/shapes (gradient or moment storage).
  ParamSet<T> zeros_like() const {
    ParamSet<T> out;
    for (const auto& [name, t] : items) out.add(name, TensorT<T>::zeros(t.shape));
    return out;
  }
};

// Leaves created in a graph for every parameter, fetched by name.
template <typename T>
struct LeafMap {
  std::vector<Var<T>> vars;
  std::unordered_map<std::string, int> index;

  Var<T> operator[](const std::string& name) const {
    auto it = index.find(name);
    require(it != index.end(), "unknown parameter leaf: " + name);
    return vars[size_t(it->second)];
  }
};

template <typename T>
LeafMap<T> make_leaves(Graph<T>& g, const ParamSet<T>& params) {
  LeafMap<T> m;
  m.vars.reserve(params.items.size());
  for (const auto& [name, t] : params.items) {
    m.index.emplace(name, int(m.vars.size()));
    m.vars.push_back(make_leaf(g, t));
  }
  return m;
}

template <typename T>
ParamSet<T> collect_grads(const Graph<T>& g, const LeafMap<T>& leaves,
                          const ParamSet<T>& params) {
  ParamSet<T> grads;
  for (const auto& [name, t] : params.items) {
    (void)t;
    grads.add(name, leaves[name].grad());
  }
  return grads;
}

// Global L2 norm over every gradient tensor.
template <typename T>
double global_norm(const ParamSet<T>& grads) {
  double acc = 0;
  for (const auto& [name, t] : grads.items) {
    (void)name;
    for (T v : t.data) acc += double(v) * double(v);
  }
  return std::sqrt(acc);
}

template <typename T>
void clip_global_norm(ParamSet<T>& grads, double max_norm) {
  if (max_norm <= 0) return;
  double n = global_norm(grads);
  if (n <= max_norm || n == 0) return;
  T s = T(max_norm / n);
  for (auto& [name, t] : grads.items) {
    (void)name;
    for (T& v : t.data) v *= s;
  }
}

}  // namespace scwr
