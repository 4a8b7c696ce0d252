#pragma once

#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace copbp {

enum class CopulaFamily { Gaussian, StudentT, Frank, Plackett, AMH, FGM, Hougaard, Clayton, Gumbel, Joe };

enum class Rotation : int { Deg0 = 0, Deg90 = 90, Deg180 = 180, Deg270 = 270 };

struct InvalidParameter : std::domain_error {
  using std::domain_error::domain_error;
};

struct SamplerError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double kDefaultStudentDf = 3.0;
inline constexpr double kUniformClamp = 1e-10;
inline constexpr double kFrankGuard = 1e-8;

/// Family, rotation and dependence parameter on the optimizer scale.
struct CopulaSpec {
  CopulaFamily family = CopulaFamily::Gaussian;
  Rotation rotation = Rotation::Deg0;
  double theta_unconstrained = 0.0;
  std::optional<double> extra;  // Student t degrees of freedom

  double df() const { return extra.value_or(kDefaultStudentDf); }
  double natural() const;
};

/// Spec whose linked parameter equals `theta` (which must lie in the open domain).
CopulaSpec with_natural(CopulaFamily family, Rotation rotation, double theta);

bool admits_rotation(CopulaFamily family);

/// The 19 family/rotation combinations, in a fixed order.
std::vector<CopulaSpec> all_copula_specs();

std::string to_code(const CopulaSpec& spec);
/// Parses codes such as "N", "T", "C180", "G90", "J270", "PL", "HO".
/// A bare "C", "G" or "J" means the unrotated family.
CopulaSpec from_code(std::string_view code);

std::string family_name(CopulaFamily family);

/// Maps the unconstrained optimizer parameter into the open family domain.
double link(double theta_unconstrained, CopulaFamily family);
/// Inverse of link; throws InvalidParameter outside the open domain.
double unlink(double theta, CopulaFamily family);
/// d link / d theta_unconstrained.
double link_derivative(double theta_unconstrained, CopulaFamily family);

/// Whether the natural parameter is admissible for CDF evaluation. This is the
/// closed domain where the formula is defined (Gumbel at 1 is independence).
bool in_domain(double theta, CopulaFamily family);

/// Kendall's tau for families with a closed form (N, T, C, G, HO, FGM, AMH
/// excluded). Rotations by 90 or 270 degrees flip the sign.
double kendall_tau(const CopulaSpec& spec);
/// Natural parameter giving the requested tau for the unrotated family.
double theta_for_tau(CopulaFamily family, double tau);

struct CopulaDerivatives {
  double cdf = 0.0;
  double du = 0.0;
  double dv = 0.0;
  double dtheta = 0.0;  // with respect to the natural parameter
};

/// A copula fixed at a natural parameter value.
class Copula {
 public:
  Copula(CopulaFamily family, Rotation rotation, double theta, double df = kDefaultStudentDf);
  static Copula from_spec(const CopulaSpec& spec);

  CopulaFamily family() const { return family_; }
  Rotation rotation() const { return rotation_; }
  double theta() const { return theta_; }
  double df() const { return df_; }

  double cdf(double u, double v) const;
  double partial_u(double u, double v) const;
  double partial_v(double u, double v) const;
  CopulaDerivatives derivatives(double u, double v) const;

  /// One draw by conditional inversion: u uniform, then v solving
  /// partial_u(u, v) = w for an independent uniform w.
  std::pair<double, double> sample(std::mt19937_64& rng) const;

 private:
  CopulaDerivatives base(double u, double v) const;
  double base_cdf(double u, double v) const;
  double base_conditional_inverse(double u, double w) const;

  CopulaFamily family_;
  Rotation rotation_;
  double theta_;
  double df_;
};

double cdf(const CopulaSpec& spec, double u, double v);
double partial_u(const CopulaSpec& spec, double u, double v);
double partial_v(const CopulaSpec& spec, double u, double v);
std::pair<double, double> sample_pair(const CopulaSpec& spec, std::mt19937_64& rng);

/// Rotates an arbitrary copula CDF:
///   90: v - C(1-u, v), 180: u + v - 1 + C(1-u, 1-v), 270: u - C(u, 1-v).
double rotate_cdf(const std::function<double(double, double)>& base_cdf, Rotation rotation, double u,
                  double v);

}  // namespace copbp
