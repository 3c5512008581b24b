#include <omp.h>

#include <iostream>

#include "CLI11.hpp"
#include "calyx/error.hpp"
#include "calyx/pipeline.hpp"
#include "calyx/registration.hpp"
#include "json.hpp"

namespace {

using calyx::Config;
using Json = nlohmann::ordered_json;

void print_report(const calyx::AssessResult& r) {
  std::cout << "frames: " << r.input_frames << " input, " << r.frames.size() << " processed";
  for (const auto& [status, count] : r.report.status_counts) {
    std::cout << ", " << count << ' ' << calyx::to_string(status);
  }
  std::cout << "\nthreshold " << r.report.threshold << '\n';
  for (const calyx::CalyxResult& c : r.report.calyces) {
    std::cout << "  " << c.id << ' ' << c.name << "  score " << c.score << "  "
              << calyx::to_string(c.classification) << '\n';
  }
}

int run(int argc, char** argv) {
  CLI::App app{"Calyx visitation assessment from localized endoscopy frames"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "OpenMP worker threads (0 keeps the runtime default)")
      ->check(CLI::NonNegativeNumber);

  std::string spec_path;
  std::string out_dir;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic phantom, reference model and query video");
  simulate->add_option("--spec", spec_path, "Simulation spec (key = value); defaults when omitted");
  simulate->add_option("--out", out_dir, "Output directory")->required();

  std::string source;
  std::string target;
  std::string init;
  std::string out_file;
  calyx::IcpParams icp;
  auto* reg = app.add_subcommand("register", "ICP of a reconstruction cloud onto a CT mesh");
  reg->add_option("--source", source, "Reconstruction point cloud (PLY)")->required();
  reg->add_option("--target", target, "CT mesh (PLY)")->required();
  reg->add_option("--init", init, "Initial transform file; identity when omitted");
  reg->add_option("--out", out_file, "Output transform file")->required();
  reg->add_option("--max-iterations", icp.max_iterations)->capture_default_str();
  reg->add_option("--delta", icp.convergence_delta_mm, "Convergence delta, mm")->capture_default_str();
  reg->add_option("--cutoff", icp.correspondence_cutoff_mm, "Correspondence cutoff, mm")->capture_default_str();

  std::string config_path;
  auto add_config_cmd = [&](const char* name, const char* help) {
    auto* cmd = app.add_subcommand(name, help);
    cmd->add_option("--config", config_path, "Config file (key = value)")->required();
    return cmd;
  };
  auto* localize = add_config_cmd("localize", "Localize query frames and write trajectory.csv");
  auto* assess = add_config_cmd("assess", "Full pipeline: localize, ray-cast, score and classify calyces");
  auto* metrics = add_config_cmd("metrics", "Reconstruction and trajectory accuracy metrics");
  auto* crossval = add_config_cmd("crossval", "Cross-validate the visitation threshold on annotated videos");

  CLI11_PARSE(app, argc, argv);
  if (threads > 0) omp_set_num_threads(threads);

  if (simulate->parsed()) {
    const calyx::SimulateSpec spec = spec_path.empty()
                                         ? calyx::SimulateSpec::defaults()
                                         : calyx::SimulateSpec::from_config(Config::load(spec_path));
    const calyx::Simulation sim = calyx::simulate(spec);
    calyx::write_simulation(sim, spec, out_dir);
    std::cout << "phantom: " << sim.phantom.mesh.mesh().vertex_count() << " vertices, "
              << sim.phantom.mesh.calyx_count() << " calyces\nreference frames: "
              << sim.model.frames.size() << "\nquery frames: " << sim.query.frames.size()
              << "\nwrote " << out_dir << '\n';
  } else if (reg->parsed()) {
    const calyx::PointCloud cloud = calyx::load_point_cloud(source);
    const calyx::TriMesh mesh = calyx::load_mesh(target);
    const calyx::RigidTransform start =
        init.empty() ? calyx::RigidTransform::identity() : calyx::load_transform(init);
    const calyx::RegistrationResult r = calyx::icp_register(cloud, mesh.vertices(), start, icp);
    calyx::save_transform(out_file, r.transform);
    const Json j = {{"residual_mm", r.mean_residual_mm},
                    {"iterations", r.iterations_used},
                    {"inliers", r.inlier_count},
                    {"residual_history", r.residual_history}};
    std::cout << j.dump(2) << '\n';
  } else if (localize->parsed()) {
    const auto frames = calyx::run_localize(calyx::AssessConfig::from_config(Config::load(config_path)));
    std::size_t accepted = 0;
    for (const auto& f : frames) accepted += f.status == calyx::FrameStatus::kAccepted;
    std::cout << accepted << " of " << frames.size() << " frames accepted\n";
  } else if (assess->parsed()) {
    print_report(calyx::run_assess(calyx::AssessConfig::from_config(Config::load(config_path))));
  } else if (metrics->parsed()) {
    std::cout << calyx::run_metrics(calyx::MetricsConfig::from_config(Config::load(config_path))) << '\n';
  } else if (crossval->parsed()) {
    std::cout << calyx::run_crossval(calyx::CrossvalConfig::from_config(Config::load(config_path))) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const calyx::Error& e) {
    std::cerr << Json{{"error", std::string(calyx::to_string(e.code()))}, {"message", e.what()}}.dump() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << Json{{"error", "Internal"}, {"message", e.what()}}.dump() << '\n';
    return 1;
  }
}
