#pragma once

#include "dmp.hpp"
#include "envs.hpp"
#include "ik.hpp"
#include "kinematics.hpp"

#include <yaml-cpp/yaml.h>

#include <filesystem>
#include <string>
#include <variant>

namespace skillref::config {

/// Configuration problem with a "file:line: message" what() string.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string located(const std::string& file, const YAML::Node& node,
                           const std::string& message) {
  return file + ":" + std::to_string(node.Mark().line + 1) + ": " + message;
}

inline YAML::Node require(const YAML::Node& parent, const std::string& key,
                          const std::string& file) {
  const YAML::Node child = parent[key];
  if (!child.IsDefined())
    throw ConfigError(located(file, parent, "missing field '" + key + "'"));
  return child;
}

template <typename T>
T value(const YAML::Node& node, const std::string& file,
        const std::string& what) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(located(file, node, "invalid value for " + what));
  }
}

inline Eigen::VectorXd vector(const YAML::Node& node, const std::string& file,
                              const std::string& what,
                              Eigen::Index expected = -1) {
  if (!node.IsSequence())
    throw ConfigError(located(file, node, what + " must be a list"));
  if (expected >= 0 && static_cast<Eigen::Index>(node.size()) != expected)
    throw ConfigError(located(
        file, node,
        what + " must have " + std::to_string(expected) + " entries"));
  Eigen::VectorXd out(node.size());
  for (size_t i = 0; i < node.size(); ++i)
    out[static_cast<Eigen::Index>(i)] = value<double>(node[i], file, what);
  return out;
}

inline Vector3d vec3(const YAML::Node& node, const std::string& file,
                     const std::string& what) {
  return vector(node, file, what, 3);
}

/// Quaternion listed as [w, x, y, z].
inline Quaterniond quat(const YAML::Node& node, const std::string& file,
                        const std::string& what) {
  const Eigen::VectorXd v = vector(node, file, what, 4);
  return Quaterniond(v[0], v[1], v[2], v[3]);
}

inline RigidTransform transform(const YAML::Node& node,
                                const std::string& file,
                                const std::string& what) {
  RigidTransform out;
  out.translation = vec3(require(node, "translation", file), file,
                         what + " translation");
  out.rotation =
      quat(require(node, "rotation", file), file, what + " rotation");
  return out;
}

}  // namespace detail

/// Chain definition: ordered joint blocks (translation, rotation [w,x,y,z],
/// axis, limits [lo,hi]) plus an end-effector transform block.
inline KinematicChain load_chain(const std::string& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::Exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  const YAML::Node joints = detail::require(root, "joints", path);
  if (!joints.IsSequence() || joints.size() == 0)
    throw ConfigError(
        detail::located(path, joints, "'joints' must be a non-empty list"));

  std::vector<JointDescriptor> descriptors;
  for (const YAML::Node& joint : joints) {
    JointDescriptor d;
    d.origin = detail::transform(joint, path, "joint");
    d.axis = detail::vec3(detail::require(joint, "axis", path), path,
                          "joint axis");
    const Eigen::VectorXd limits = detail::vector(
        detail::require(joint, "limits", path), path, "joint limits", 2);
    d.lower = limits[0];
    d.upper = limits[1];
    descriptors.push_back(std::move(d));
  }
  const RigidTransform end_effector = detail::transform(
      detail::require(root, "end_effector", path), path, "end_effector");
  try {
    return KinematicChain(std::move(descriptors), end_effector);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

/// Scenario: a scoring task plus the motion endpoints in joint space.
struct TaskConfig {
  std::variant<envs::ViapointTask, envs::ObstacleTask> task;
  JointVector start_joints;
  JointVector goal_joints;

  bool is_viapoint() const {
    return std::holds_alternative<envs::ViapointTask>(task);
  }
  const envs::ViapointTask& viapoint() const {
    return std::get<envs::ViapointTask>(task);
  }
  const envs::ObstacleTask& obstacle() const {
    return std::get<envs::ObstacleTask>(task);
  }
  int trajectory_steps() const {
    return is_viapoint() ? viapoint().trajectory_steps
                         : obstacle().trajectory_steps;
  }
};

inline TaskConfig load_task(const std::string& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::Exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  TaskConfig out;
  const std::string type = detail::value<std::string>(
      detail::require(root, "type", path), path, "type");

  if (type == "viapoint") {
    envs::ViapointTask task;
    const YAML::Node points = detail::require(root, "viapoints", path);
    if (!points.IsSequence() || points.size() == 0)
      throw ConfigError(detail::located(
          path, points, "'viapoints' must be a non-empty list"));
    for (const YAML::Node& p : points) {
      envs::Viapoint v;
      v.step = detail::value<int>(detail::require(p, "step", path), path,
                                  "viapoint step");
      v.position = detail::vec3(detail::require(p, "position", path), path,
                                "viapoint position");
      task.viapoints.push_back(v);
    }
    if (const YAML::Node w = root["weights"]; w.IsDefined()) {
      if (w["distance"]) task.c_dist = detail::value<double>(w["distance"], path, "weights.distance");
      if (w["velocity"]) task.c_vel = detail::value<double>(w["velocity"], path, "weights.velocity");
      if (w["acceleration"]) task.c_acc = detail::value<double>(w["acceleration"], path, "weights.acceleration");
    }
    if (root["steps"])
      task.trajectory_steps =
          detail::value<int>(root["steps"], path, "steps");
    try {
      task.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(path + ": " + e.what());
    }
    out.task = std::move(task);
  } else if (type == "obstacle") {
    envs::ObstacleTask task;
    task.goal = detail::vec3(detail::require(root, "goal", path), path, "goal");
    const YAML::Node obstacles = detail::require(root, "obstacles", path);
    if (!obstacles.IsSequence())
      throw ConfigError(
          detail::located(path, obstacles, "'obstacles' must be a list"));
    for (const YAML::Node& o : obstacles)
      task.obstacles.push_back(detail::vec3(
          detail::require(o, "center", path), path, "obstacle center"));
    if (root["influence_radius"])
      task.influence_radius = detail::value<double>(root["influence_radius"],
                                                    path, "influence_radius");
    if (const YAML::Node w = root["weights"]; w.IsDefined()) {
      if (w["obstacle"]) task.c_obs = detail::value<double>(w["obstacle"], path, "weights.obstacle");
      if (w["goal"]) task.c_goal = detail::value<double>(w["goal"], path, "weights.goal");
      if (w["velocity"]) task.c_vel = detail::value<double>(w["velocity"], path, "weights.velocity");
      if (w["acceleration"]) task.c_acc = detail::value<double>(w["acceleration"], path, "weights.acceleration");
    }
    if (root["steps"])
      task.trajectory_steps =
          detail::value<int>(root["steps"], path, "steps");
    try {
      task.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(path + ": " + e.what());
    }
    out.task = std::move(task);
  } else {
    throw ConfigError(detail::located(
        path, root["type"], "type must be 'viapoint' or 'obstacle'"));
  }

  out.start_joints = detail::vector(
      detail::require(root, "start_joints", path), path, "start_joints");
  out.goal_joints = detail::vector(
      detail::require(root, "goal_joints", path), path, "goal_joints");
  if (out.start_joints.size() != out.goal_joints.size())
    throw ConfigError(path + ": start_joints and goal_joints lengths differ");
  return out;
}

struct ExperimentConfig {
  std::string chain_file;
  std::string task_file;
  dmp::Space space{dmp::Space::joint};
  ik::Solver solver{ik::Solver::approx};  // cartesian only
  double sigma{0.1};
  int episodes{1000};
  int runs{30};
  unsigned int base_seed{0};
  MetricWeights metric{};
  ik::IkSettings ik_settings{};
  std::string output_dir{"out"};
  int threads{0};  // 0 = hardware concurrency

  void validate() const {
    if (chain_file.empty() || task_file.empty())
      throw ConfigError("experiment: chain and task files are required");
    if (episodes < 1) throw ConfigError("experiment: episodes must be >= 1");
    if (runs < 1) throw ConfigError("experiment: runs must be >= 1");
    if (!(sigma > 0.0)) throw ConfigError("experiment: sigma must be > 0");
    if (threads < 0) throw ConfigError("experiment: threads must be >= 0");
    metric.validate();
    ik_settings.validate();
  }
};

inline dmp::Space parse_space(const std::string& text, const std::string& file,
                              const YAML::Node& node) {
  if (text == "joint") return dmp::Space::joint;
  if (text == "cartesian") return dmp::Space::cartesian;
  throw ConfigError(
      detail::located(file, node, "space must be 'joint' or 'cartesian'"));
}

inline ik::Solver parse_solver(const std::string& text,
                               const std::string& file,
                               const YAML::Node& node) {
  if (text == "exact") return ik::Solver::exact;
  if (text == "approx") return ik::Solver::approx;
  throw ConfigError(
      detail::located(file, node, "ik must be 'exact' or 'approx'"));
}

/// Relative chain/task paths resolve against the experiment file's folder.
inline ExperimentConfig load_experiment(const std::string& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::Exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  const std::filesystem::path base =
      std::filesystem::path(path).parent_path();
  const auto resolve = [&base](const std::string& file) {
    const std::filesystem::path p(file);
    return p.is_absolute() ? p.string() : (base / p).string();
  };

  ExperimentConfig out;
  out.chain_file = resolve(detail::value<std::string>(
      detail::require(root, "chain", path), path, "chain"));
  out.task_file = resolve(detail::value<std::string>(
      detail::require(root, "task", path), path, "task"));

  const YAML::Node space_node = detail::require(root, "space", path);
  out.space = parse_space(
      detail::value<std::string>(space_node, path, "space"), path, space_node);

  if (const YAML::Node ik_node = root["ik"]; ik_node.IsDefined()) {
    if (out.space == dmp::Space::joint)
      throw ConfigError(detail::located(
          path, ik_node, "joint-space configs must not set 'ik'"));
    out.solver = parse_solver(
        detail::value<std::string>(ik_node, path, "ik"), path, ik_node);
  }

  out.sigma = detail::value<double>(detail::require(root, "sigma", path),
                                    path, "sigma");
  if (root["episodes"])
    out.episodes = detail::value<int>(root["episodes"], path, "episodes");
  if (root["runs"]) out.runs = detail::value<int>(root["runs"], path, "runs");
  if (root["base_seed"])
    out.base_seed =
        detail::value<unsigned int>(root["base_seed"], path, "base_seed");
  if (root["output_dir"])
    out.output_dir =
        detail::value<std::string>(root["output_dir"], path, "output_dir");
  if (root["threads"])
    out.threads = detail::value<int>(root["threads"], path, "threads");

  if (const YAML::Node m = root["metric"]; m.IsDefined()) {
    if (m["position"])
      out.metric.position =
          detail::value<double>(m["position"], path, "metric.position");
    if (m["rotation"])
      out.metric.rotation =
          detail::value<double>(m["rotation"], path, "metric.rotation");
  }
  if (const YAML::Node s = root["ik_settings"]; s.IsDefined()) {
    if (s["smoothness"])
      out.ik_settings.smoothness =
          detail::value<double>(s["smoothness"], path, "ik_settings.smoothness");
    if (s["restarts"])
      out.ik_settings.restarts =
          detail::value<int>(s["restarts"], path, "ik_settings.restarts");
    if (s["max_iterations"])
      out.ik_settings.max_iterations = detail::value<int>(
          s["max_iterations"], path, "ik_settings.max_iterations");
    if (s["exact_max_iterations"])
      out.ik_settings.exact_max_iterations = detail::value<int>(
          s["exact_max_iterations"], path, "ik_settings.exact_max_iterations");
    if (s["position_tolerance"])
      out.ik_settings.position_tolerance = detail::value<double>(
          s["position_tolerance"], path, "ik_settings.position_tolerance");
    if (s["rotation_tolerance"])
      out.ik_settings.rotation_tolerance = detail::value<double>(
          s["rotation_tolerance"], path, "ik_settings.rotation_tolerance");
    if (s["damping"])
      out.ik_settings.damping =
          detail::value<double>(s["damping"], path, "ik_settings.damping");
  }
  out.ik_settings.metric = out.metric;
  out.validate();
  return out;
}

}  // namespace skillref::config
