#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "compofun/common.hpp"

namespace cf {

/// One entry of the closed primitive registry.  Every node in a compositional
/// function refers to one of these by name; user functions enter the system
/// only as DAGs of registry primitives.
struct Primitive {
  std::string name;
  int arity;        // -1: variadic (determined by the node's inward edges)
  bool linear;      // first-order polynomial in its inputs
  int deriv_depth;  // max |k| with exact partial derivatives; 0 = value only

  // value at z given node params
  std::function<double(const std::vector<double>& params, std::span<const double> z)> eval;

  // exact partial derivative for multi-index k (|k| <= deriv_depth)
  std::function<double(const std::vector<double>& params, std::span<const double> z,
                       std::span<const int> k)>
      deriv;

  // interval range over a box of per-input intervals
  std::function<Interval(const std::vector<double>& params, std::span<const Interval> z)> range;
};

const Primitive& primitive(const std::string& name);
bool has_primitive(const std::string& name);
const std::vector<std::string>& primitive_names();

/// n-th derivative of tanh expressed through t = tanh(s); exact for n <= 6.
double tanh_derivative(int n, double t);

}  // namespace cf
