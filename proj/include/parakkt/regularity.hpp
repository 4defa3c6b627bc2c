#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "parakkt/field.hpp"
#include "parakkt/kkt.hpp"
#include "parakkt/mesh.hpp"
#include "parakkt/problem.hpp"

namespace parakkt {

struct HolderOptions {
  /// Upper bound on the number of point pairs scanned (spread over the bins).
  long n_pairs = 2000000;
  std::uint64_t seed = 1;
  /// d = |x - x'| + |t - t'|^(1/2) when set, |x - x'| + |t - t'| otherwise.
  bool parabolic = true;
  /// Bins are [d0 r^b, d0 r^(b+1)) with r = bin_ratio, from d0 = min_distance
  /// up to max_distance.
  /// min_distance <= 0 means 2 grid spacings; max_distance <= 0 means a
  /// quarter of the space-time diameter.
  double min_distance = 0.0;
  double max_distance = 0.0;
  double bin_ratio = 1.4142135623730951;
};

struct HolderBin {
  double lo = 0.0, hi = 0.0;   // distance range [lo, hi)
  double max_increment = 0.0;
  double at_distance = 0.0;    // distance of the pair attaining max_increment
  long pairs = 0;
};

struct HolderEstimate {
  bool defined = false;         // false for (numerically) constant fields
  bool low_confidence = false;  // fewer than 3 usable bins or 100 pairs
  double alpha = 0.0;           // clipped to (0, 1.05]
  double alpha_raw = 0.0;       // unclipped regression slope
  double band = 0.0;            // two standard errors of the slope
  double C = 0.0;               // max over bins of increment / hi^alpha
  long pairs = 0;
  int usable_bins = 0;
  double fit_residual = 0.0;    // rms of the log-log fit
  std::vector<HolderBin> bins;
  std::string note;

  nlohmann::json to_json() const;
};

/// Max increment per distance bin over Q-levels 1..nt, then the least-squares
/// slope of log(max increment) against log(distance of the maximizing pair).
/// Using the attained distance rather than the bin edge keeps the estimate
/// from depending on which lattice distances happen to fall in a bin.
/// With `region`, a pair counts when either end lies in it, which stands in
/// for the closure of a region that the grid only resolves to within h.
HolderEstimate holder_estimate(const Field& field, const Mesh& mesh,
                               const HolderOptions& options = {}, const Mask* region = nullptr);

struct RegularityReport {
  HolderEstimate y, u, phi, e, ehat;
  HolderEstimate e_on_0;      // e restricted to mask_0
  HolderEstimate ehat_on_a;   // ehat restricted to mask_a
  HolderEstimate ehat_on_b;   // ehat restricted to mask_b
  HolderEstimate ehat_on_ab;  // ehat restricted to mask_ab (zero when recovered exactly)
  double alpha_star = 0.0;
  double R0 = 0.0;

  nlohmann::json to_json() const;
};

/// Exponents of every field of a solution plus the per-region ones.
RegularityReport regularity_report(const Mesh& mesh, const Field& y, const Field& u,
                                   const Field& phi, const Field& e, const Field& ehat,
                                   const ActiveSets& sets, const HolderOptions& options = {});

struct MaxPrincipleReport {
  bool nonneg_applicable = false;  // u >= 0 and y0 >= 0
  double min_y = 0.0;
  bool nonneg_pass = true;
  bool comparison_checked = false;
  double min_difference = 0.0;     // min of S(u1) - S(u2)
  int strict_nodes = 0;            // nodes with S(u1) - S(u2) > 1e-12
  bool comparison_pass = true;

  bool pass() const { return nonneg_pass && comparison_pass; }
  nlohmann::json to_json() const;
};

/// (i) u >= 0 and y0 >= 0 imply min y >= -1e-12; (ii) with a pair u1 >= u2,
/// S(u1) >= S(u2) - 1e-12 nodewise. Throws InvalidArgument when u1 >= u2 fails.
MaxPrincipleReport maximum_principle_check(const ProblemSpec& spec, const EllipticOperator& op,
                                           const Field& y, const Field& u,
                                           const Field* u1 = nullptr, const Field* u2 = nullptr,
                                           const PdeOptions& options = {});

struct DomainDescriptor {
  std::string shape;          // "interval", "rectangle"; anything else is unsupported
  std::vector<double> sides;
  static DomainDescriptor from(const Domain& d);
};

struct DensityConstants {
  double alpha_star = 0.5;
  double R0 = 0.0;
};

/// Convex domains have positive geometric density with alpha* = 1/2; R0 is
/// half the shortest side. Non-rectangular shapes return nothing.
std::optional<DensityConstants> check_positive_density(const DomainDescriptor& domain);

}  // namespace parakkt
