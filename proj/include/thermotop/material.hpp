// Bi-material (hard/soft) property model: relaxed Heaviside, exchange
// function and the power-law interpolation of conductivity and heat source,
// plus the element-wise characteristic field driven by a nodal
// discrimination field.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "thermotop/mesh.hpp"

namespace thermotop {

enum class Phase : uint8_t { Soft = 0, Hard = 1 };

struct RegionMaterial {
  std::string name = "background";
  Mat3 kappa = Mat3::Identity();  // reference conductivity (W/(K m))
  double heat_source = 0.0;       // reference r (W/m^3)
  double alpha_kappa = 1e-3;      // contrast factors, alpha = beta^m
  double m_kappa = 5.0;
  double alpha_r = 1e-3;
  double m_r = 1.0;
  bool optimizable = true;
  Phase fixed_phase = Phase::Hard;  // phase held when not optimizable

  double beta_kappa() const { return std::pow(alpha_kappa, 1.0 / m_kappa); }
  double beta_r() const { return std::pow(alpha_r, 1.0 / m_r); }
};

struct MaterialModel {
  std::vector<RegionMaterial> regions;  // indexed by mesh region id

  const RegionMaterial& region(int id) const { return regions.at(id); }
  void validate() const;  // SPD kappa, exponents/contrasts in range
};

// Element-wise bi-valued topology: hard carries chi = 1, soft chi = beta.
struct CharacteristicField {
  std::vector<Phase> flags;

  static CharacteristicField initial(const Mesh& mesh, const MaterialModel& mat);
  bool is_hard(int e) const { return flags[e] == Phase::Hard; }
};

struct DiscriminationField {
  Eigen::VectorXd psi;  // nodal
};

// H_beta: 1 for x >= 0 (interface counted as hard), beta for x < 0.
double relaxed_heaviside(double x, double beta);

// Signed jump of chi under a hard<->soft exchange: -(1-beta) / +(1-beta).
double exchange_function(Phase phase, double beta);

Mat3 interpolate_conductivity(const MaterialModel& mat, int region, Phase phase);
double interpolate_heat_source(const MaterialModel& mat, int region, Phase phase);

// Element flags from the sign of psi at element centroids; frozen regions
// keep their fixed assignment.
CharacteristicField chi_from_psi(const Mesh& mesh, const MaterialModel& mat,
                                 const DiscriminationField& psi,
                                 const CharacteristicField& previous);

}  // namespace thermotop
