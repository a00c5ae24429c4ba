#include "agefresh/distributions.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

#include "agefresh/error.hpp"

namespace agefresh {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_positive(double x, const char* what) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw ValidationError(std::string(what) + " must be a positive finite number");
  }
}

std::string format_double(double x) {
  // Shortest representation that parses back to the same double.
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

}  // namespace

DistributionSpec DistributionSpec::exponential(double rate) {
  require_positive(rate, "exponential rate");
  return DistributionSpec(Exponential{rate});
}

DistributionSpec DistributionSpec::gamma(double shape, double scale) {
  require_positive(shape, "gamma shape");
  require_positive(scale, "gamma scale");
  return DistributionSpec(Gamma{shape, scale});
}

DistributionSpec DistributionSpec::deterministic(double value) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw ValidationError("deterministic value must be a nonnegative finite number");
  }
  return DistributionSpec(Deterministic{value});
}

bool DistributionSpec::is_degenerate_zero() const {
  const auto* d = std::get_if<Deterministic>(&kind_);
  return d != nullptr && d->value == 0.0;
}

bool operator==(const DistributionSpec& a, const DistributionSpec& b) {
  if (a.kind_.index() != b.kind_.index()) return false;
  return std::visit(
      Overloaded{
          [&](const Exponential& x) { return x.rate == std::get<Exponential>(b.kind_).rate; },
          [&](const Gamma& x) {
            const auto& y = std::get<Gamma>(b.kind_);
            return x.shape == y.shape && x.scale == y.scale;
          },
          [&](const Deterministic& x) { return x.value == std::get<Deterministic>(b.kind_).value; },
      },
      a.kind_);
}

std::array<double, 3> lst_derivatives(const DistributionSpec& dist, double x) {
  return std::visit(
      Overloaded{
          [x](const Exponential& e) -> std::array<double, 3> {
            const double r = 1.0 / (e.rate + x);
            const double f = e.rate * r;
            return {f, -f * r, 2.0 * f * r * r};
          },
          [x](const Gamma& g) -> std::array<double, 3> {
            const double base = 1.0 + g.scale * x;
            const double f = std::pow(base, -g.shape);
            const double r = g.scale / base;
            return {f, -g.shape * r * f, g.shape * (g.shape + 1.0) * r * r * f};
          },
          [x](const Deterministic& d) -> std::array<double, 3> {
            const double f = std::exp(-d.value * x);
            return {f, -d.value * f, d.value * d.value * f};
          },
      },
      dist.kind());
}

double lst_complement(const DistributionSpec& dist, double x) {
  return std::visit(Overloaded{
                        [x](const Exponential& e) { return x / (e.rate + x); },
                        [x](const Gamma& g) {
                          return -std::expm1(-g.shape * std::log1p(g.scale * x));
                        },
                        [x](const Deterministic& d) { return -std::expm1(-d.value * x); },
                    },
                    dist.kind());
}

double lst(const DistributionSpec& dist, LstQuery q) {
  if (!(q.s >= 0.0) || !std::isfinite(q.s)) {
    throw ValidationError("LST argument must be a nonnegative finite number");
  }
  if (q.order < 0 || q.order > 2) {
    throw ValidationError("LST derivative order must be 0, 1 or 2");
  }
  return lst_derivatives(dist, q.s)[static_cast<std::size_t>(q.order)];
}

double moment(const DistributionSpec& dist, int n) {
  if (n != 1 && n != 2) throw ValidationError("moment order must be 1 or 2");
  return std::visit(Overloaded{
                        [n](const Exponential& e) {
                          return n == 1 ? 1.0 / e.rate : 2.0 / (e.rate * e.rate);
                        },
                        [n](const Gamma& g) {
                          const double m = g.shape * g.scale;
                          return n == 1 ? m : m * (g.shape + 1.0) * g.scale;
                        },
                        [n](const Deterministic& d) { return n == 1 ? d.value : d.value * d.value; },
                    },
                    dist.kind());
}

double sample(const DistributionSpec& dist, std::mt19937_64& rng) {
  // std::gamma_distribution uses Marsaglia-Tsang with the boost for shape < 1,
  // so it is exact for the small shapes used in the experiments.
  return std::visit(Overloaded{
                        [&rng](const Exponential& e) {
                          return std::exponential_distribution<double>(e.rate)(rng);
                        },
                        [&rng](const Gamma& g) {
                          return std::gamma_distribution<double>(g.shape, g.scale)(rng);
                        },
                        [](const Deterministic& d) { return d.value; },
                    },
                    dist.kind());
}

Jet lst_jet(const DistributionSpec& dist, const Jet& arg) {
  const auto f = lst_derivatives(dist, arg.value);
  return compose(f[0], f[1], f[2], arg);
}

Jet lst_complement_jet(const DistributionSpec& dist, const Jet& arg) {
  const auto f = lst_derivatives(dist, arg.value);
  return compose(lst_complement(dist, arg.value), -f[1], -f[2], arg);
}

std::vector<double> lst_taylor(const DistributionSpec& dist, double c, int n) {
  std::vector<double> t(static_cast<std::size_t>(std::max(n, 0)));
  if (t.empty()) return t;
  t[0] = lst_derivatives(dist, c)[0];
  std::visit(Overloaded{
                 [&](const Exponential& e) {
                   const double ratio = -1.0 / (e.rate + c);
                   for (std::size_t i = 1; i < t.size(); ++i) t[i] = t[i - 1] * ratio;
                 },
                 [&](const Gamma& g) {
                   const double r = -g.scale / (1.0 + g.scale * c);
                   for (std::size_t i = 1; i < t.size(); ++i) {
                     const double m = static_cast<double>(i);
                     t[i] = t[i - 1] * r * (g.shape + m - 1.0) / m;
                   }
                 },
                 [&](const Deterministic& d) {
                   for (std::size_t i = 1; i < t.size(); ++i) {
                     t[i] = t[i - 1] * (-d.value / static_cast<double>(i));
                   }
                 },
             },
             dist.kind());
  return t;
}

namespace {

std::string lower_trimmed(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return out;
}

double parse_number(std::string_view tok, std::string_view whole) {
  double v = 0.0;
  const char* end = tok.data() + tok.size();
  auto res = std::from_chars(tok.data(), end, v);
  if (tok.empty() || res.ec != std::errc() || res.ptr != end) {
    throw ValidationError("bad number '" + std::string(tok) + "' in distribution '" +
                          std::string(whole) + "'");
  }
  return v;
}

}  // namespace

DistributionSpec parse_distribution(std::string_view text) {
  const std::string s = lower_trimmed(text);
  const auto open = s.find('(');
  if (open == std::string::npos || s.back() != ')') {
    throw ValidationError("distribution '" + std::string(text) +
                          "' must look like exp(rate), gamma(shape,scale) or det(value)");
  }
  const std::string name = s.substr(0, open);
  const std::string_view body(s.data() + open + 1, s.size() - open - 2);

  std::vector<double> args;
  std::size_t start = 0;
  while (true) {
    const auto comma = body.find(',', start);
    args.push_back(parse_number(body.substr(start, comma - start), text));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }

  auto want = [&](std::size_t n) {
    if (args.size() != n) {
      throw ValidationError(name + " expects " + std::to_string(n) + " parameter(s) in '" +
                            std::string(text) + "'");
    }
  };
  if (name == "exp") {
    want(1);
    return DistributionSpec::exponential(args[0]);
  }
  if (name == "gamma") {
    want(2);
    return DistributionSpec::gamma(args[0], args[1]);
  }
  if (name == "det") {
    want(1);
    return DistributionSpec::deterministic(args[0]);
  }
  throw ValidationError("unknown distribution family '" + name + "' in '" + std::string(text) +
                        "'");
}

std::string to_string(const DistributionSpec& dist) {
  return std::visit(Overloaded{
                        [](const Exponential& e) { return "exp(" + format_double(e.rate) + ")"; },
                        [](const Gamma& g) {
                          return "gamma(" + format_double(g.shape) + "," +
                                 format_double(g.scale) + ")";
                        },
                        [](const Deterministic& d) {
                          return "det(" + format_double(d.value) + ")";
                        },
                    },
                    dist.kind());
}

}  // namespace agefresh
