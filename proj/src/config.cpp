#include "thermotop/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace thermotop {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& errs) {
  std::ostringstream os;
  os << "configuration invalid (" << errs.size() << " error"
     << (errs.size() == 1 ? "" : "s") << "):";
  for (const auto& e : errs) os << "\n  - " << e;
  return os.str();
}

class Reader {
 public:
  explicit Reader(std::vector<std::string>& errors) : errors_(errors) {}

  void fail(const std::string& msg) { errors_.push_back(msg); }

  template <typename T>
  T get(const json& j, const std::string& key, const T& fallback,
        bool required = false) {
    if (!j.contains(key)) {
      if (required) fail("missing required key '" + key + "'");
      return fallback;
    }
    try {
      return j.at(key).get<T>();
    } catch (const json::exception&) {
      fail("key '" + key + "' has the wrong type");
      return fallback;
    }
  }

 private:
  std::vector<std::string>& errors_;
};

Vec3 to_vec3(const json& j, int expected, Reader& r, const std::string& what) {
  Vec3 v = Vec3::Zero();
  if (!j.is_array() || (int)j.size() < std::min(expected, 3)) {
    r.fail(what + " must be an array of " + std::to_string(expected) +
           " numbers");
    return v;
  }
  for (int d = 0; d < (int)j.size() && d < 3; ++d) v[d] = j[d].get<double>();
  return v;
}

json vec3_to_json(const Vec3& v, int dim) {
  json a = json::array();
  for (int d = 0; d < dim; ++d) a.push_back(v[d]);
  return a;
}

FaceSelector parse_selector(const json& j, int dim, Reader& r) {
  FaceSelector sel;
  const std::string axis = r.get<std::string>(j, "axis", "x", true);
  if (axis == "x") sel.axis = 0;
  else if (axis == "y") sel.axis = 1;
  else if (axis == "z") sel.axis = 2;
  else r.fail("selector axis must be x, y or z");
  if (sel.axis >= dim) r.fail("selector axis exceeds the mesh dimension");
  const std::string side = r.get<std::string>(j, "side", "min", true);
  if (side == "min") sel.side = 0;
  else if (side == "max") sel.side = 1;
  else r.fail("selector side must be min or max");
  if (j.contains("disc")) {
    sel.disc_center = to_vec3(j["disc"].at("center"), dim, r, "disc center");
    sel.disc_radius = r.get<double>(j["disc"], "radius", 0.0, true);
  }
  if (j.contains("rect")) {
    sel.rect_min = to_vec3(j["rect"].at("min"), dim, r, "rect min");
    sel.rect_max = to_vec3(j["rect"].at("max"), dim, r, "rect max");
  }
  return sel;
}

json selector_to_json(const FaceSelector& sel, int dim) {
  json j;
  j["axis"] = std::string(1, "xyz"[sel.axis]);
  j["side"] = sel.side == 0 ? "min" : "max";
  if (sel.disc_center) {
    j["disc"] = {{"center", vec3_to_json(*sel.disc_center, dim)},
                 {"radius", sel.disc_radius}};
  }
  if (sel.rect_min && sel.rect_max) {
    j["rect"] = {{"min", vec3_to_json(*sel.rect_min, dim)},
                 {"max", vec3_to_json(*sel.rect_max, dim)}};
  }
  return j;
}

RegionMaterial parse_material(const json& j, const std::string& name, Reader& r) {
  RegionMaterial m;
  m.name = name;
  if (j.contains("kappa")) {
    const auto& k = j["kappa"];
    if (k.is_number()) {
      m.kappa = k.get<double>() * Mat3::Identity();
    } else if (k.is_array()) {
      m.kappa = Mat3::Identity();
      for (int a = 0; a < 3 && a < (int)k.size(); ++a)
        for (int b = 0; b < 3 && b < (int)k[a].size(); ++b)
          m.kappa(a, b) = k[a][b].get<double>();
    } else {
      r.fail("material '" + name + "': kappa must be a number or 3x3 matrix");
    }
  }
  m.heat_source = r.get<double>(j, "heat_source", 0.0);
  m.alpha_kappa = r.get<double>(j, "alpha_kappa", 1e-3);
  m.m_kappa = r.get<double>(j, "m_kappa", 5.0);
  m.alpha_r = r.get<double>(j, "alpha_r", 1e-3);
  m.m_r = r.get<double>(j, "m_r", 1.0);
  m.optimizable = r.get<bool>(j, "optimizable", true);
  const std::string phase = r.get<std::string>(j, "phase", "hard");
  if (phase == "hard") m.fixed_phase = Phase::Hard;
  else if (phase == "soft") m.fixed_phase = Phase::Soft;
  else r.fail("material '" + name + "': phase must be hard or soft");
  if (!std::isfinite(m.heat_source) || !m.kappa.allFinite())
    r.fail("material '" + name + "': physical values must be finite");
  if (!(m.alpha_kappa > 0 && m.alpha_kappa <= 1) ||
      !(m.alpha_r > 0 && m.alpha_r <= 1))
    r.fail("material '" + name + "': contrast factors must lie in (0,1]");
  if (m.m_kappa < 1 || m.m_r < 1)
    r.fail("material '" + name + "': exponents must be >= 1");
  return m;
}

json material_to_json(const RegionMaterial& m) {
  json j;
  const Mat3& k = m.kappa;
  if (k.isApprox(k(0, 0) * Mat3::Identity()))
    j["kappa"] = k(0, 0);
  else {
    json rows = json::array();
    for (int a = 0; a < 3; ++a)
      rows.push_back(json::array({k(a, 0), k(a, 1), k(a, 2)}));
    j["kappa"] = rows;
  }
  j["heat_source"] = m.heat_source;
  j["alpha_kappa"] = m.alpha_kappa;
  j["m_kappa"] = m.m_kappa;
  j["alpha_r"] = m.alpha_r;
  j["m_r"] = m.m_r;
  j["optimizable"] = m.optimizable;
  j["phase"] = m.fixed_phase == Phase::Hard ? "hard" : "soft";
  return j;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errs)
    : std::runtime_error(join(errs)), errors(std::move(errs)) {}

ProblemConfig parse_config_json(const json& root) {
  std::vector<std::string> errors;
  Reader r(errors);
  ProblemConfig cfg;

  // --- mesh ---
  if (!root.contains("mesh")) {
    errors.push_back("missing required block 'mesh'");
  } else {
    const json& jm = root["mesh"];
    cfg.mesh.dim = r.get<int>(jm, "dim", 3);
    if (cfg.mesh.dim != 2 && cfg.mesh.dim != 3)
      r.fail("mesh.dim must be 2 or 3");
    auto dims = r.get<std::vector<int>>(jm, "dims", {}, true);
    auto spacing = r.get<std::vector<double>>(jm, "spacing", {}, true);
    if ((int)dims.size() < cfg.mesh.dim)
      r.fail("mesh.dims needs one entry per axis");
    if ((int)spacing.size() < cfg.mesh.dim)
      r.fail("mesh.spacing needs one entry per axis");
    cfg.mesh.dims = {1, 1, 1};
    cfg.mesh.spacing = {1.0, 1.0, 1.0};
    for (int d = 0; d < cfg.mesh.dim && d < (int)dims.size(); ++d) {
      cfg.mesh.dims[d] = dims[d];
      if (dims[d] < 1) r.fail("mesh.dims entries must be >= 1");
    }
    for (int d = 0; d < cfg.mesh.dim && d < (int)spacing.size(); ++d) {
      cfg.mesh.spacing[d] = spacing[d];
      if (!(spacing[d] > 0)) r.fail("mesh.spacing entries must be > 0");
    }
    for (const auto& jr : jm.value("regions", json::array())) {
      RegionSpec spec;
      spec.name = r.get<std::string>(jr, "name", "", true);
      spec.is_void = r.get<bool>(jr, "void", false);
      const json& js = jr.contains("shape") ? jr["shape"] : json::object();
      const std::string type = r.get<std::string>(js, "type", "box", true);
      if (type == "box") {
        spec.shape.kind = RegionShape::Kind::Box;
        spec.shape.box_min = to_vec3(js.value("min", json::array()), cfg.mesh.dim,
                                     r, "region '" + spec.name + "' box min");
        spec.shape.box_max = to_vec3(js.value("max", json::array()), cfg.mesh.dim,
                                     r, "region '" + spec.name + "' box max");
      } else if (type == "sphere") {
        spec.shape.kind = RegionShape::Kind::Sphere;
        spec.shape.center = to_vec3(js.value("center", json::array()),
                                    cfg.mesh.dim, r, "sphere center");
        spec.shape.diameters =
            Vec3::Constant(r.get<double>(js, "diameter", 0.0, true));
      } else if (type == "ellipsoid") {
        spec.shape.kind = RegionShape::Kind::Ellipsoid;
        spec.shape.center = to_vec3(js.value("center", json::array()),
                                    cfg.mesh.dim, r, "ellipsoid center");
        spec.shape.diameters = to_vec3(js.value("diameters", json::array()),
                                       cfg.mesh.dim, r, "ellipsoid diameters");
        if (js.contains("rotation_axis"))
          spec.shape.rotation_axis =
              to_vec3(js["rotation_axis"], 3, r, "rotation axis");
        spec.shape.rotation_deg = r.get<double>(js, "rotation_deg", 0.0);
      } else {
        r.fail("region '" + spec.name + "': unknown shape type '" + type + "'");
      }
      cfg.mesh.regions.push_back(std::move(spec));
    }
  }

  // --- materials ---
  cfg.materials.resize(cfg.mesh.regions.size() + 1);
  cfg.materials[0].name = "background";
  for (size_t i = 0; i < cfg.mesh.regions.size(); ++i)
    cfg.materials[i + 1].name = cfg.mesh.regions[i].name;
  if (root.contains("materials")) {
    for (auto it = root["materials"].begin(); it != root["materials"].end();
         ++it) {
      bool found = false;
      for (auto& m : cfg.materials)
        if (m.name == it.key()) {
          m = parse_material(it.value(), it.key(), r);
          found = true;
        }
      if (!found)
        r.fail("materials: '" + it.key() + "' does not match any region");
    }
  }

  // --- boundary conditions ---
  for (const auto& jb : root.value("bcs", json::array())) {
    BoundarySpecEntry e;
    const std::string type = r.get<std::string>(jb, "type", "adiabatic", true);
    if (type == "dirichlet") {
      e.kind = BoundaryKind::Dirichlet;
      e.value = r.get<double>(jb, "value", 0.0, true);
    } else if (type == "flux") {
      e.kind = BoundaryKind::Flux;
      e.value = r.get<double>(jb, "value", 0.0, true);
    } else if (type == "convection") {
      e.kind = BoundaryKind::Convection;
      e.h = r.get<double>(jb, "h", 0.0, true);
      e.theta_amb = r.get<double>(jb, "theta_amb", 0.0, true);
    } else if (type == "adiabatic") {
      e.kind = BoundaryKind::Adiabatic;
    } else {
      r.fail("bcs: unknown type '" + type + "'");
    }
    if (jb.contains("region")) {
      e.dirichlet_region = jb["region"].get<std::string>();
      if (e.kind != BoundaryKind::Dirichlet)
        r.fail("bcs: region-wide entries must be dirichlet");
      bool known = e.dirichlet_region == "background";
      for (const auto& reg : cfg.mesh.regions)
        known |= (reg.name == e.dirichlet_region);
      if (!known)
        r.fail("bcs: unknown region '" + e.dirichlet_region + "'");
    } else if (jb.contains("where")) {
      e.where = parse_selector(jb["where"], cfg.mesh.dim, r);
    } else {
      r.fail("bcs: entry needs a 'where' selector or a 'region'");
    }
    if (!std::isfinite(e.value) || !std::isfinite(e.h) ||
        !std::isfinite(e.theta_amb))
      r.fail("bcs: physical values must be finite");
    cfg.bcs.push_back(std::move(e));
  }

  // --- functional ---
  if (!root.contains("functional")) {
    errors.push_back("missing required block 'functional'");
  } else {
    const json& jf = root["functional"];
    const std::string kind = r.get<std::string>(jf, "kind", "", true);
    if (kind == "compliance") {
      cfg.functional.kind = FunctionalKind::Compliance;
    } else if (kind == "flux_cloak") {
      cfg.functional.kind = FunctionalKind::FluxCloak;
      cfg.functional.target_flux =
          to_vec3(jf.value("target_flux", json::array()), cfg.mesh.dim, r,
                  "functional.target_flux");
      cfg.functional.mask_regions = r.get<std::vector<std::string>>(
          jf, "mask_regions", {}, true);
      for (const auto& name : cfg.functional.mask_regions) {
        bool known = name == "background";
        for (const auto& reg : cfg.mesh.regions) known |= (reg.name == name);
        if (!known) r.fail("functional: unknown mask region '" + name + "'");
      }
      if (cfg.functional.mask_regions.empty())
        r.fail("functional: flux_cloak needs a non-empty mask");
    } else if (kind == "temp_multi") {
      cfg.functional.kind = FunctionalKind::TempMulti;
      if (jf.contains("port"))
        cfg.functional.port = parse_selector(jf["port"], cfg.mesh.dim, r);
      else
        r.fail("functional: temp_multi needs a 'port' selector");
      cfg.functional.omega = r.get<double>(jf, "omega", 0.5);
      if (!(cfg.functional.omega >= 0.0 && cfg.functional.omega <= 1.0))
        r.fail("functional: omega must lie in [0,1]");
      cfg.utopia_cache = r.get<std::string>(jf, "cache", "");
    } else {
      r.fail("functional: unknown kind '" + kind + "'");
    }
  }

  // --- optimizer ---
  {
    const json jo = root.value("optimizer", json::object());
    cfg.optimizer.tol_chi = r.get<double>(jo, "tol_chi", 1e-1);
    cfg.optimizer.tol_lambda = r.get<double>(jo, "tol_lambda", 1e-1);
    cfg.optimizer.tol_c = r.get<double>(jo, "tol_c", 1e-3);
    cfg.optimizer.max_outer_iters = r.get<int>(jo, "max_outer_iters", 50);
    cfg.optimizer.max_bisection_iters =
        r.get<int>(jo, "max_bisection_iters", 200);
    cfg.optimizer.tau = r.get<double>(jo, "tau", 1.0);
    cfg.optimizer.marching_subdiv = r.get<int>(jo, "marching_subdiv", kMarchingSubdivFast);
    if (cfg.optimizer.tol_chi <= 0 || cfg.optimizer.tol_lambda <= 0 ||
        cfg.optimizer.tol_c <= 0)
      r.fail("optimizer: tolerances must be > 0");
    if (jo.contains("time_grid")) {
      cfg.optimizer.time_grid = r.get<std::vector<double>>(jo, "time_grid", {});
    } else {
      const double t_final = r.get<double>(jo, "t_final", 0.0, true);
      const int steps = r.get<int>(jo, "steps", 0, true);
      if (steps >= 1 && t_final > 0)
        for (int k = 1; k <= steps; ++k)
          cfg.optimizer.time_grid.push_back(t_final * k / steps);
      else if (jo.contains("t_final") || jo.contains("steps"))
        r.fail("optimizer: t_final must be > 0 and steps >= 1");
    }
    for (size_t i = 0; i < cfg.optimizer.time_grid.size(); ++i) {
      const double t = cfg.optimizer.time_grid[i];
      if (!(t >= 0.0 && t < 1.0))
        r.fail("optimizer: pseudo-times must lie in [0,1)");
      if (i > 0 && t <= cfg.optimizer.time_grid[i - 1])
        r.fail("optimizer: time grid must be strictly increasing");
    }
    const std::string method = r.get<std::string>(jo, "method", "closed_form");
    if (method == "closed_form") cfg.method = Method::ClosedForm;
    else if (method == "levelset") cfg.method = Method::LevelSet;
    else r.fail("optimizer: method must be closed_form or levelset");
    cfg.levelset.delta_t = r.get<double>(jo, "delta_t", 1e-1);
    cfg.levelset.rho = r.get<double>(jo, "rho", 5e-2);
    cfg.levelset.max_iters_per_step =
        r.get<int>(jo, "max_ls_iters_per_step", 2000);
  }

  // --- output ---
  {
    const json jo = root.value("output", json::object());
    cfg.output.directory = r.get<std::string>(jo, "directory", "out");
    cfg.output.snapshot_every = r.get<int>(jo, "snapshot_every", 1);
    cfg.output.formats =
        r.get<std::vector<std::string>>(jo, "formats", {"vtk", "csv"});
    for (const auto& f : cfg.output.formats)
      if (f != "vtk" && f != "csv") r.fail("output: unknown format '" + f + "'");
  }

  if (!errors.empty()) throw ConfigError(errors);
  return cfg;
}

ProblemConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config file '" + path + "'"});
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError({std::string("JSON parse failure: ") + e.what()});
  }
  return parse_config_json(j);
}

std::vector<std::string> validate_config_json(const json& j) {
  try {
    parse_config_json(j);
  } catch (const ConfigError& e) {
    return e.errors;
  }
  return {};
}

nlohmann::json config_to_json(const ProblemConfig& cfg) {
  json root;
  json jm;
  jm["dim"] = cfg.mesh.dim;
  jm["dims"] = std::vector<int>(cfg.mesh.dims.begin(),
                                cfg.mesh.dims.begin() + cfg.mesh.dim);
  jm["spacing"] = std::vector<double>(cfg.mesh.spacing.begin(),
                                      cfg.mesh.spacing.begin() + cfg.mesh.dim);
  json regions = json::array();
  for (const auto& reg : cfg.mesh.regions) {
    json jr;
    jr["name"] = reg.name;
    if (reg.is_void) jr["void"] = true;
    json js;
    switch (reg.shape.kind) {
      case RegionShape::Kind::Box:
        js["type"] = "box";
        js["min"] = vec3_to_json(reg.shape.box_min, cfg.mesh.dim);
        js["max"] = vec3_to_json(reg.shape.box_max, cfg.mesh.dim);
        break;
      case RegionShape::Kind::Sphere:
        js["type"] = "sphere";
        js["center"] = vec3_to_json(reg.shape.center, cfg.mesh.dim);
        js["diameter"] = reg.shape.diameters[0];
        break;
      case RegionShape::Kind::Ellipsoid:
        js["type"] = "ellipsoid";
        js["center"] = vec3_to_json(reg.shape.center, cfg.mesh.dim);
        js["diameters"] = vec3_to_json(reg.shape.diameters, cfg.mesh.dim);
        if (reg.shape.rotation_deg != 0.0) {
          js["rotation_axis"] = vec3_to_json(reg.shape.rotation_axis, 3);
          js["rotation_deg"] = reg.shape.rotation_deg;
        }
        break;
    }
    jr["shape"] = js;
    regions.push_back(jr);
  }
  if (!regions.empty()) jm["regions"] = regions;
  root["mesh"] = jm;

  json jmat;
  for (const auto& m : cfg.materials) jmat[m.name] = material_to_json(m);
  root["materials"] = jmat;

  json jbcs = json::array();
  for (const auto& e : cfg.bcs) {
    json jb;
    switch (e.kind) {
      case BoundaryKind::Dirichlet:
        jb["type"] = "dirichlet";
        jb["value"] = e.value;
        break;
      case BoundaryKind::Flux:
        jb["type"] = "flux";
        jb["value"] = e.value;
        break;
      case BoundaryKind::Convection:
        jb["type"] = "convection";
        jb["h"] = e.h;
        jb["theta_amb"] = e.theta_amb;
        break;
      case BoundaryKind::Adiabatic:
        jb["type"] = "adiabatic";
        break;
    }
    if (!e.dirichlet_region.empty())
      jb["region"] = e.dirichlet_region;
    else
      jb["where"] = selector_to_json(e.where, cfg.mesh.dim);
    jbcs.push_back(jb);
  }
  root["bcs"] = jbcs;

  json jf;
  switch (cfg.functional.kind) {
    case FunctionalKind::Compliance:
      jf["kind"] = "compliance";
      break;
    case FunctionalKind::FluxCloak:
      jf["kind"] = "flux_cloak";
      jf["target_flux"] = vec3_to_json(cfg.functional.target_flux, cfg.mesh.dim);
      jf["mask_regions"] = cfg.functional.mask_regions;
      break;
    case FunctionalKind::TempMulti:
      jf["kind"] = "temp_multi";
      jf["port"] = selector_to_json(cfg.functional.port, cfg.mesh.dim);
      jf["omega"] = cfg.functional.omega;
      if (!cfg.utopia_cache.empty()) jf["cache"] = cfg.utopia_cache;
      break;
  }
  root["functional"] = jf;

  json jo;
  jo["time_grid"] = cfg.optimizer.time_grid;
  jo["tol_chi"] = cfg.optimizer.tol_chi;
  jo["tol_lambda"] = cfg.optimizer.tol_lambda;
  jo["tol_c"] = cfg.optimizer.tol_c;
  jo["max_outer_iters"] = cfg.optimizer.max_outer_iters;
  jo["max_bisection_iters"] = cfg.optimizer.max_bisection_iters;
  jo["tau"] = cfg.optimizer.tau;
  jo["marching_subdiv"] = cfg.optimizer.marching_subdiv;
  jo["method"] = cfg.method == Method::ClosedForm ? "closed_form" : "levelset";
  jo["delta_t"] = cfg.levelset.delta_t;
  jo["rho"] = cfg.levelset.rho;
  jo["max_ls_iters_per_step"] = cfg.levelset.max_iters_per_step;
  root["optimizer"] = jo;

  json jout;
  jout["directory"] = cfg.output.directory;
  jout["snapshot_every"] = cfg.output.snapshot_every;
  jout["formats"] = cfg.output.formats;
  root["output"] = jout;
  return root;
}

}  // namespace thermotop
