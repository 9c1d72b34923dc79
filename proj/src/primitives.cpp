#include "compofun/primitives.hpp"

#include <map>

namespace cf {

namespace {

double factorial(int n) {
  double f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

int order_of(std::span<const int> k) {
  int o = 0;
  for (int v : k) o += v;
  return o;
}

Interval monotone_range(double (*fn)(double), Interval z) {
  return Interval::hull(fn(z.lo), fn(z.hi));
}

double affine_eval(const std::vector<double>& p, std::span<const double> z) {
  double s = p.empty() ? 0.0 : p[0];
  for (size_t i = 0; i < z.size(); ++i) s += (i + 1 < p.size() ? p[i + 1] : 0.0) * z[i];
  return s;
}

double affine_deriv(const std::vector<double>& p, std::span<const double> z,
                    std::span<const int> k) {
  int o = order_of(k);
  if (o == 0) return affine_eval(p, z);
  if (o > 1) return 0.0;
  for (size_t i = 0; i < k.size(); ++i)
    if (k[i] == 1) return i + 1 < p.size() ? p[i + 1] : 0.0;
  return 0.0;
}

Interval affine_range(const std::vector<double>& p, std::span<const Interval> z) {
  Interval s = Interval::point(p.empty() ? 0.0 : p[0]);
  for (size_t i = 0; i < z.size(); ++i) s = s + (i + 1 < p.size() ? p[i + 1] : 0.0) * z[i];
  return s;
}

// neuron activation shared by neuron_* primitives; params = [b, w_1..w_d]
double neuron_pre(const std::vector<double>& p, std::span<const double> z) {
  double s = p.empty() ? 0.0 : p[0];
  for (size_t i = 0; i < z.size(); ++i) s += (i + 1 < p.size() ? p[i + 1] : 0.0) * z[i];
  return s;
}

Interval neuron_pre_range(const std::vector<double>& p, std::span<const Interval> z) {
  Interval s = Interval::point(p.empty() ? 0.0 : p[0]);
  for (size_t i = 0; i < z.size(); ++i) s = s + (i + 1 < p.size() ? p[i + 1] : 0.0) * z[i];
  return s;
}

double neuron_weight_pow(const std::vector<double>& p, std::span<const int> k) {
  double w = 1.0;
  for (size_t i = 0; i < k.size(); ++i)
    for (int j = 0; j < k[i]; ++j) w *= (i + 1 < p.size() ? p[i + 1] : 0.0);
  return w;
}

std::map<std::string, Primitive> build_registry() {
  std::map<std::string, Primitive> reg;

  reg["affine"] = Primitive{"affine", -1, true, 64, affine_eval, affine_deriv, affine_range};

  reg["identity"] = Primitive{
      "identity", 1, true, 64,
      [](const std::vector<double>&, std::span<const double> z) { return z[0]; },
      [](const std::vector<double>&, std::span<const double> z, std::span<const int> k) {
        int o = order_of(k);
        if (o == 0) return z[0];
        return o == 1 ? 1.0 : 0.0;
      },
      [](const std::vector<double>&, std::span<const Interval> z) { return z[0]; }};

  reg["product"] = Primitive{
      "product", 2, false, 64,
      [](const std::vector<double>&, std::span<const double> z) { return z[0] * z[1]; },
      [](const std::vector<double>&, std::span<const double> z, std::span<const int> k) {
        if (k[0] == 0 && k[1] == 0) return z[0] * z[1];
        if (k[0] == 1 && k[1] == 0) return z[1];
        if (k[0] == 0 && k[1] == 1) return z[0];
        if (k[0] == 1 && k[1] == 1) return 1.0;
        return 0.0;
      },
      [](const std::vector<double>&, std::span<const Interval> z) { return z[0] * z[1]; }};

  // inner product of the first half of the inputs with the second half
  reg["dot"] = Primitive{
      "dot", -1, false, 64,
      [](const std::vector<double>&, std::span<const double> z) {
        size_t q = z.size() / 2;
        double s = 0;
        for (size_t i = 0; i < q; ++i) s += z[i] * z[q + i];
        return s;
      },
      [](const std::vector<double>&, std::span<const double> z, std::span<const int> k) {
        size_t q = z.size() / 2;
        int o = order_of(k);
        if (o == 0) {
          double s = 0;
          for (size_t i = 0; i < q; ++i) s += z[i] * z[q + i];
          return s;
        }
        if (o == 1) {
          for (size_t i = 0; i < k.size(); ++i)
            if (k[i] == 1) return i < q ? z[q + i] : z[i - q];
        }
        if (o == 2) {
          for (size_t i = 0; i < q; ++i)
            if (k[i] == 1 && k[q + i] == 1) return 1.0;
        }
        return 0.0;
      },
      [](const std::vector<double>&, std::span<const Interval> z) {
        size_t q = z.size() / 2;
        Interval s = Interval::point(0.0);
        for (size_t i = 0; i < q; ++i) s = s + z[i] * z[q + i];
        return s;
      }};

  reg["quotient"] = Primitive{
      "quotient", 2, false, 64,
      [](const std::vector<double>&, std::span<const double> z) { return z[0] / z[1]; },
      [](const std::vector<double>&, std::span<const double> z, std::span<const int> k) {
        if (k[0] > 1) return 0.0;
        int b = k[1];
        double sgn = (b % 2 == 0) ? 1.0 : -1.0;
        double core = sgn * factorial(b) * std::pow(z[1], -(b + 1));
        return k[0] == 1 ? core : z[0] * core;
      },
      [](const std::vector<double>&, std::span<const Interval> z) {
        if (z[1].contains(0.0)) return Interval::all();
        Interval inv = Interval::hull(1.0 / z[1].lo, 1.0 / z[1].hi);
        return z[0] * inv;
      }};

  reg["reciprocal"] = Primitive{
      "reciprocal", 1, false, 64,
      [](const std::vector<double>&, std::span<const double> z) { return 1.0 / z[0]; },
      [](const std::vector<double>&, std::span<const double> z, std::span<const int> k) {
        int b = k[0];
        double sgn = (b % 2 == 0) ? 1.0 : -1.0;
        return sgn * factorial(b) * std::pow(z[0], -(b + 1));
      },
      [](const std::vector<double>&, std::span<const Interval> z) {
        if (z[0].contains(0.0)) return Interval::all();
        return Interval::hull(1.0 / z[0].lo, 1.0 / z[0].hi);
      }};

  // params = [k], integer power z^k, k >= 1
  reg["power"] = Primitive{
      "power", 1, false, 64,
      [](const std::vector<double>& p, std::span<const double> z) {
        return std::pow(z[0], p.at(0));
      },
      [](const std::vector<double>& p, std::span<const double> z, std::span<const int> k) {
        int n = static_cast<int>(p.at(0));
        int j = k[0];
        if (j > n) return 0.0;
        double c = 1;
        for (int i = 0; i < j; ++i) c *= (n - i);
        return c * std::pow(z[0], n - j);
      },
      [](const std::vector<double>& p, std::span<const Interval> z) {
        int n = static_cast<int>(p.at(0));
        Interval r = Interval::hull(std::pow(z[0].lo, n), std::pow(z[0].hi, n));
        if (n % 2 == 0 && z[0].contains(0.0)) r.lo = std::min(r.lo, 0.0);
        return r;
      }};

  reg["sin"] = Primitive{
      "sin", 1, false, 64,
      [](const std::vector<double>&, std::span<const double> z) { return std::sin(z[0]); },
      [](const std::vector<double>&, std::span<const double> z, std::span<const int> k) {
        return std::sin(z[0] + k[0] * M_PI_2);
      },
      [](const std::vector<double>&, std::span<const Interval> z) {
        if (z[0].hi - z[0].lo >= 2 * M_PI) return Interval{-1.0, 1.0};
        Interval r = Interval::hull(std::sin(z[0].lo), std::sin(z[0].hi));
        for (double c = std::ceil(z[0].lo / M_PI_2) * M_PI_2; c <= z[0].hi; c += M_PI_2)
          r = Interval{std::min(r.lo, std::sin(c)), std::max(r.hi, std::sin(c))};
        return r;
      }};

  reg["cos"] = Primitive{
      "cos", 1, false, 64,
      [](const std::vector<double>&, std::span<const double> z) { return std::cos(z[0]); },
      [](const std::vector<double>&, std::span<const double> z, std::span<const int> k) {
        return std::cos(z[0] + k[0] * M_PI_2);
      },
      [](const std::vector<double>&, std::span<const Interval> z) {
        if (z[0].hi - z[0].lo >= 2 * M_PI) return Interval{-1.0, 1.0};
        Interval r = Interval::hull(std::cos(z[0].lo), std::cos(z[0].hi));
        for (double c = std::ceil(z[0].lo / M_PI_2) * M_PI_2; c <= z[0].hi; c += M_PI_2)
          r = Interval{std::min(r.lo, std::cos(c)), std::max(r.hi, std::cos(c))};
        return r;
      }};

  reg["exp"] = Primitive{
      "exp", 1, false, 64,
      [](const std::vector<double>&, std::span<const double> z) { return std::exp(z[0]); },
      [](const std::vector<double>&, std::span<const double> z, std::span<const int>) {
        return std::exp(z[0]);
      },
      [](const std::vector<double>&, std::span<const Interval> z) {
        return monotone_range(std::exp, z[0]);
      }};

  reg["tanh"] = Primitive{
      "tanh", 1, false, 6,
      [](const std::vector<double>&, std::span<const double> z) { return std::tanh(z[0]); },
      [](const std::vector<double>&, std::span<const double> z, std::span<const int> k) {
        return tanh_derivative(k[0], std::tanh(z[0]));
      },
      [](const std::vector<double>&, std::span<const Interval> z) {
        return monotone_range(std::tanh, z[0]);
      }};

  reg["neuron_tanh"] = Primitive{
      "neuron_tanh", -1, false, 6,
      [](const std::vector<double>& p, std::span<const double> z) {
        return std::tanh(neuron_pre(p, z));
      },
      [](const std::vector<double>& p, std::span<const double> z, std::span<const int> k) {
        double t = std::tanh(neuron_pre(p, z));
        return tanh_derivative(order_of(k), t) * neuron_weight_pow(p, k);
      },
      [](const std::vector<double>& p, std::span<const Interval> z) {
        Interval s = neuron_pre_range(p, z);
        return monotone_range(std::tanh, s);
      }};

  reg["neuron_linear"] = Primitive{
      "neuron_linear", -1, true, 64,
      neuron_pre,
      [](const std::vector<double>& p, std::span<const double> z, std::span<const int> k) {
        int o = order_of(k);
        if (o == 0) return neuron_pre(p, z);
        if (o > 1) return 0.0;
        return neuron_weight_pow(p, k);
      },
      neuron_pre_range};

  return reg;
}

const std::map<std::string, Primitive>& registry() {
  static const std::map<std::string, Primitive> reg = build_registry();
  return reg;
}

}  // namespace

double tanh_derivative(int n, double t) {
  double u = 1 - t * t;
  switch (n) {
    case 0: return t;
    case 1: return u;
    case 2: return -2 * t * u;
    case 3: return u * (6 * t * t - 2);
    case 4: return u * (16 * t - 24 * t * t * t);
    case 5: return u * (16 - 120 * t * t + 120 * t * t * t * t);
    case 6: return u * (-272 * t + 960 * t * t * t - 720 * t * t * t * t * t);
    default:
      throw ConfigError("tanh derivative order " + std::to_string(n) +
                        " exceeds the registry depth");
  }
}

const Primitive& primitive(const std::string& name) {
  auto it = registry().find(name);
  if (it == registry().end()) throw SchemaError("unknown primitive: " + name);
  return it->second;
}

bool has_primitive(const std::string& name) { return registry().count(name) > 0; }

const std::vector<std::string>& primitive_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [k, _] : registry()) v.push_back(k);
    return v;
  }();
  return names;
}

}  // namespace cf
