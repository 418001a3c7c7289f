#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "owtsim/discretization.hpp"
#include "owtsim/morison.hpp"
#include "owtsim/sea.hpp"
#include "owtsim/soil.hpp"
#include "owtsim/spatial.hpp"

namespace owtsim {

enum class DofType { revolute, prismatic };

// One scalar degree of freedom of the serial chain. Joint clusters are three
// consecutive revolute dofs (bending x, bending y, torsion z) at the same
// point; a soil-supported root adds slide x/y and rock x/y dofs. Frames are
// world-aligned at q = 0.
struct Dof {
  DofType type = DofType::revolute;
  Vec3 axis = Vec3::UnitX();       // in parent coordinates at q = 0
  int parent = -1;                 // previous dof, -1 attaches to ground
  SpatialTransform x_tree;         // parent frame -> this frame at q = 0
  SpatialInertia inertia;          // body carried by this dof (zero for intermediates)
  double spring_k = 0;             // N m/rad, joint-cluster dofs only
  double damper_c = 0;             // N m s/rad
  int cluster = -1;                // joint cluster index, -1 for root dofs
  int cluster_axis = -1;           // 0 = bending x, 1 = bending y, 2 = torsion
};

struct JointClusterInfo {
  double elevation = 0;
  int dof_start = 0;  // first of three consecutive dofs
  JointSection section;
};

// Lumped point mass (the RNA) rigidly attached to a link.
struct PointAttachment {
  int link = 0;
  Vec3 point_offset = Vec3::Zero();  // attachment point from link origin
  Vec3 cm_offset = Vec3::Zero();     // CM from the attachment point
  double mass = 0;
  Mat3 inertia_cm = Mat3::Zero();
};

struct SoilBinding {
  int link = 0;
  Vec3 offset = Vec3::Zero();
  SoilNodeConfig cfg;
};

struct StripBinding {
  int link = 0;
  Vec3 offset = Vec3::Zero();
  StripElement strip;
  double added_mass = 0;  // kg, rho_w Ca pi D^2/4 * length
};

// Material point reported through the node<i> output channels. link = -1
// marks a ground-fixed point (the root node of a clamped chain).
struct OutputNode {
  int link = -1;
  Vec3 offset = Vec3::Zero();
  double elevation = 0;
};

enum class RootCondition { clamped, soil_supported };

struct RnaProperties {
  double mass = 0;
  Vec3 inertia_diag = Vec3::Zero();  // about its CM
  Vec3 cm_offset = Vec3::Zero();     // from the attachment point
  double attach_elevation = 0;       // m (yaw bearing)
};

struct SoilProfile {
  PYCurveSet curves;
  int n_nodes = 61;
  double beta_s = 0;
  double f_load = 0;  // Hz
};

struct HydroProfile {
  SeaStateConfig sea;
  int strips_per_body = 4;
};

struct ModelBindings {
  std::optional<SoilProfile> soil;
  std::optional<HydroProfile> hydro;
  double mudline_elevation = 0;
};

// Immutable after assembly; shareable across threads.
struct ChainModel {
  std::vector<Dof> dofs;
  std::vector<JointClusterInfo> clusters;
  std::vector<PointAttachment> attachments;
  std::vector<SoilBinding> soil_nodes;
  PYCurveSet soil_curves;
  std::vector<StripBinding> strips;
  std::vector<OutputNode> nodes;
  RootCondition root_bc = RootCondition::clamped;
  double root_elevation = 0;
  double top_elevation = 0;
  double yaw_elevation = 0;
  int yaw_link = -1;
  Vec3 yaw_offset = Vec3::Zero();
  double water_depth = 0;   // > 0 when hydro strips are bound
  double char_radius = 1;   // largest outer section radius; torsion-arm scale

  int ndof() const { return static_cast<int>(dofs.size()); }
  int n_joints() const { return static_cast<int>(clusters.size()); }

  double max_bending_k() const {
    double k = 0;
    for (const auto& c : clusters) k = std::max(k, c.section.bending_k);
    return k;
  }

  // Value-semantics update used by damping calibration.
  ChainModel with_joint_dampers(const VecX& dampers) const {
    if (dampers.size() != ndof()) throw ConfigError("damper vector size mismatch");
    ChainModel m = *this;
    for (int k = 0; k < m.ndof(); ++k) {
      if (dampers[k] < 0) throw ConfigError("damper coefficients must be >= 0");
      m.dofs[k].damper_c = dampers[k];
    }
    return m;
  }
};

namespace detail {

struct Segment {
  double lo = 0, hi = 0;
  int carrying_dof = -1;  // dof whose link holds this segment's inertia
};

inline SpatialInertia body_inertia_about(const PositionedBody& body, double origin_elevation) {
  RigidBodyProperties p = frustum_mass_properties(body.frustum);
  Vec3 cm(0, 0, body.base_elevation + p.z_cm - origin_elevation);
  Mat3 inertia_cm = Vec3(p.I_xx, p.I_yy, p.I_zz).asDiagonal();
  return SpatialInertia::from_cm(p.mass, cm, inertia_cm);
}

}  // namespace detail

// Builds the serial-chain model: joint clusters at the plan's mid-nodes, one
// composite rigid link between consecutive joints, point masses folded into
// their owning links, and soil/hydro strips bound to material points.
inline ChainModel assemble_chain(const std::vector<PositionedBody>& bodies,
                                 const DiscretizationPlan& plan,
                                 const std::vector<RnaProperties>& attachments,
                                 const ModelBindings& bindings, RootCondition root_bc) {
  if (plan.joints.empty()) throw ConfigError("assemble_chain: discretization has no joints");
  ChainModel model;
  model.root_bc = root_bc;
  model.root_elevation = plan.element_boundaries.front();
  model.top_elevation = plan.element_boundaries.back();
  for (const auto& body : bodies)
    model.char_radius = std::max({model.char_radius, body.frustum.outer_b, body.frustum.outer_t});

  const int n_joints = static_cast<int>(plan.joint_elevations.size());

  // Inter-joint segments: [root, j0], [j0, j1], ..., [j_{n-1}, top].
  std::vector<detail::Segment> segments(n_joints + 1);
  for (int s = 0; s <= n_joints; ++s) {
    segments[s].lo = (s == 0) ? model.root_elevation : plan.joint_elevations[s - 1];
    segments[s].hi = (s == n_joints) ? model.top_elevation : plan.joint_elevations[s];
  }

  auto segment_of = [&segments](double z) -> int {
    for (int s = 0; s < static_cast<int>(segments.size()); ++s)
      if (z <= segments[s].hi + 1e-9) return s;
    throw ConfigError("elevation " + format_double(z) + " above structure top");
  };

  // Root dofs for a flexible foundation: the pile tip slides laterally and
  // rocks; it is held vertically and in torsion.
  double prev_origin = model.root_elevation;
  int prev_dof = -1;
  if (root_bc == RootCondition::soil_supported) {
    const Vec3 axes[4] = {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitX(), Vec3::UnitY()};
    const DofType types[4] = {DofType::prismatic, DofType::prismatic, DofType::revolute,
                              DofType::revolute};
    for (int i = 0; i < 4; ++i) {
      Dof d;
      d.type = types[i];
      d.axis = axes[i];
      d.parent = prev_dof;
      d.x_tree = SpatialTransform::translation(
          i == 0 ? Vec3(0, 0, model.root_elevation) : Vec3::Zero());
      model.dofs.push_back(d);
      prev_dof = model.ndof() - 1;
    }
    segments[0].carrying_dof = prev_dof;
  }
  // For a clamped root, segment 0 is welded to ground (carrying_dof = -1).

  for (int j = 0; j < n_joints; ++j) {
    double jz = plan.joint_elevations[j];
    JointClusterInfo info;
    info.elevation = jz;
    info.dof_start = model.ndof();
    info.section = plan.joints[j];
    model.clusters.push_back(info);
    const Vec3 axes[3] = {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
    for (int a = 0; a < 3; ++a) {
      Dof d;
      d.type = DofType::revolute;
      d.axis = axes[a];
      d.parent = prev_dof;
      d.x_tree = SpatialTransform::translation(
          a == 0 ? Vec3(0, 0, jz - prev_origin) : Vec3::Zero());
      d.cluster = j;
      d.cluster_axis = a;
      d.spring_k = (a == 2) ? plan.joints[j].torsion_k : plan.joints[j].bending_k;
      model.dofs.push_back(d);
      prev_dof = model.ndof() - 1;
    }
    prev_origin = jz;
    segments[j + 1].carrying_dof = prev_dof;
  }

  // Fold body inertias into their carrying links.
  for (const auto& body : bodies) {
    double mid = body.base_elevation + 0.5 * body.frustum.h;
    int s = segment_of(mid);
    if (body.base_elevation < segments[s].lo - 1e-6 ||
        body.base_elevation + body.frustum.h > segments[s].hi + 1e-6)
      throw ConfigError("body at z=" + format_double(body.base_elevation) +
                        " straddles a joint");
    int dof = segments[s].carrying_dof;
    if (dof < 0) continue;  // clamped root segment, inert
    model.dofs[dof].inertia += detail::body_inertia_about(body, segments[s].lo);
  }

  // Point masses (RNA).
  for (const auto& rna : attachments) {
    int s = segment_of(rna.attach_elevation);
    int dof = segments[s].carrying_dof;
    if (dof < 0) throw ConfigError("point mass attached to the clamped root segment");
    PointAttachment att;
    att.link = dof;
    att.point_offset = Vec3(0, 0, rna.attach_elevation - segments[s].lo);
    att.cm_offset = rna.cm_offset;
    att.mass = rna.mass;
    att.inertia_cm = rna.inertia_diag.asDiagonal();
    model.attachments.push_back(att);
    model.dofs[dof].inertia +=
        SpatialInertia::from_cm(att.mass, att.point_offset + att.cm_offset, att.inertia_cm);
  }

  // Yaw bearing: load application point, default at the structure top.
  model.yaw_elevation =
      attachments.empty() ? model.top_elevation : attachments.front().attach_elevation;
  {
    int s = segment_of(model.yaw_elevation);
    model.yaw_link = segments[s].carrying_dof;
    model.yaw_offset = Vec3(0, 0, model.yaw_elevation - segments[s].lo);
    if (model.yaw_link < 0) throw ConfigError("yaw bearing on the clamped root segment");
  }

  // Soil nodes tile the embedded length below the mudline.
  if (bindings.soil) {
    const SoilProfile& sp = *bindings.soil;
    if (root_bc != RootCondition::soil_supported)
      throw ConfigError("soil bindings require a soil-supported root");
    double mud = bindings.mudline_elevation;
    double embedded = mud - model.root_elevation;
    if (!(embedded > 0)) throw ConfigError("soil bindings need an embedded section");
    if (sp.n_nodes < 1) throw ConfigError("need at least one soil node");
    if (!(sp.f_load > 0)) throw ConfigError("soil f_load must be set");
    model.soil_curves = sp.curves;
    double ls = embedded / sp.n_nodes;
    for (int i = 0; i < sp.n_nodes; ++i) {
      double z = model.root_elevation + (i + 0.5) * ls;
      int s = segment_of(z);
      SoilBinding b;
      b.link = segments[s].carrying_dof;
      b.offset = Vec3(0, 0, z - segments[s].lo);
      b.cfg.elevation = z;
      b.cfg.strip_length = ls;
      b.cfg.beta_s = sp.beta_s;
      b.cfg.f_load = sp.f_load;
      b.cfg.validate();
      model.soil_nodes.push_back(b);
    }
  }

  // Hydro strips tile each body's submerged span.
  if (bindings.hydro) {
    const HydroProfile& hp = *bindings.hydro;
    hp.sea.validate();
    model.water_depth = hp.sea.water_depth;
    double mud = bindings.mudline_elevation;
    double swl = mud + hp.sea.water_depth;
    if (hp.strips_per_body < 1) throw ConfigError("need at least one strip per body");
    for (const auto& body : bodies) {
      double lo = std::max(body.base_elevation, mud);
      double hi = std::min(body.base_elevation + body.frustum.h, swl);
      if (hi - lo < 1e-9) continue;
      int s = segment_of(0.5 * (lo + hi));
      int dof = segments[s].carrying_dof;
      double dl = (hi - lo) / hp.strips_per_body;
      for (int i = 0; i < hp.strips_per_body; ++i) {
        double zc = lo + (i + 0.5) * dl;
        StripBinding strip;
        strip.link = dof;
        strip.offset = Vec3(0, 0, zc - segments[s].lo);
        strip.strip.z = zc - swl;
        strip.strip.length = dl;
        strip.strip.diameter = 2.0 * body.frustum.outer_at(zc - body.base_elevation);
        strip.strip.validate();
        strip.added_mass = added_mass_per_length(hp.sea, strip.strip.diameter) * dl;
        if (dof >= 0) model.strips.push_back(strip);
      }
    }
  }

  // Output nodes at the element boundaries.
  for (double z : plan.element_boundaries) {
    OutputNode node;
    node.elevation = z;
    int s = segment_of(std::min(z, model.top_elevation));
    // A boundary exactly at a joint belongs to the lower segment; either link
    // gives the same material point.
    node.link = segments[s].carrying_dof;
    node.offset = Vec3(0, 0, z - segments[s].lo);
    model.nodes.push_back(node);
  }

  for (const auto& d : model.dofs)
    if (d.cluster >= 0 && !(d.spring_k > 0))
      throw ConfigError("assembled joint with non-positive spring constant");
  return model;
}

}  // namespace owtsim
