#pragma once

// Arithmetic on the half projective line: the set of rays through the
// origin in the nonnegative quadrant.  A point [r:s] is stored via its
// canonical coordinate kappa = r/(r+s) in [0,1], which makes equality,
// the metric and the total order exact and representation independent.
// kappa = 1 encodes the infinite ratio [1:0], kappa = 0 encodes [0:1].

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace ispec {

class HplPoint {
 public:
  HplPoint() : kappa_(0.5) {}

  static HplPoint from_kappa(double k) {
    if (!(k >= 0.0 && k <= 1.0))
      throw std::invalid_argument("HplPoint: kappa outside [0,1]: " +
                                  std::to_string(k));
    return HplPoint(k);
  }

  // The point [1:0], top of the order.
  static HplPoint infinity() { return HplPoint(1.0); }
  // The point [0:1], bottom of the order.
  static HplPoint zero() { return HplPoint(0.0); }
  // The point [1:1].
  static HplPoint one() { return HplPoint(0.5); }

  double kappa() const { return kappa_; }

  bool is_infinite() const { return kappa_ == 1.0; }

  friend bool operator==(const HplPoint& a, const HplPoint& b) {
    return a.kappa_ == b.kappa_;
  }
  friend bool operator!=(const HplPoint& a, const HplPoint& b) {
    return !(a == b);
  }

 private:
  explicit HplPoint(double k) : kappa_(k) {}
  double kappa_;
};

// Builds the point [r:s].  (r,s) must be admissible: both nonnegative,
// finite, not both zero.
inline HplPoint hpl_from(double r, double s) {
  if (!std::isfinite(r) || !std::isfinite(s))
    throw std::invalid_argument("hpl_from: non-finite component");
  if (r < 0.0 || s < 0.0)
    throw std::invalid_argument("hpl_from: negative component");
  if (r == 0.0 && s == 0.0)
    throw std::invalid_argument("hpl_from: (0,0) is not admissible");
  return HplPoint::from_kappa(r / (r + s));
}

// |kappa(p) - kappa(q)|, the metric induced by the kappa homeomorphism.
inline double hpl_dist(const HplPoint& p, const HplPoint& q) {
  return std::abs(p.kappa() - q.kappa());
}

// Total order with minimum [0:1] and maximum [1:0].
inline bool hpl_leq(const HplPoint& p, const HplPoint& q) {
  return p.kappa() <= q.kappa();
}

inline bool hpl_less(const HplPoint& p, const HplPoint& q) {
  return p.kappa() < q.kappa();
}

// The extended logarithm ln[r:s] = ln(r) - ln(s) in [-inf,+inf].
// In kappa coordinates this is ln(kappa) - ln(1-kappa).
inline double hpl_log(const HplPoint& p) {
  const double k = p.kappa();
  if (k == 1.0) return std::numeric_limits<double>::infinity();
  if (k == 0.0) return -std::numeric_limits<double>::infinity();
  if (k == 0.5) return 0.0;
  return std::log(k) - std::log1p(-k);
}

}  // namespace ispec
