#include <CLI11.hpp>

#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include "fleetsim/codec.hpp"
#include "fleetsim/experiments.hpp"
#include "fleetsim/fqn.hpp"
#include "fleetsim/trajectory.hpp"

namespace {

using namespace fleetsim;

std::string os_hostname() {
  char buf[256] = {0};
  if (::gethostname(buf, sizeof(buf) - 1) != 0) return "host";
  return buf;
}

std::string segment_or_dash(const std::optional<fqn::SegmentValue>& seg) {
  return seg ? seg->render() : "-";
}

void print_tuple(const fqn::FqnTuple& tuple) {
  std::cout << "scope: " << fqn::scope_word(tuple.scope) << "\n"
            << "agent: " << segment_or_dash(tuple.agent) << "\n"
            << "component: " << segment_or_dash(tuple.component) << "\n"
            << "stream: " << segment_or_dash(tuple.stream) << "\n"
            << "resource: " << tuple.resource.render() << "\n"
            << "kind: " << fqn::to_string(tuple.kind) << "\n";
  std::string text = fqn::build_fqn(tuple);
  std::cout << "fqn: " << text << "\n";
  if (tuple.kind == fqn::ResourceKind::Service) {
    std::cout << "dds_request: "
              << fqn::to_dds_name(text, fqn::DdsKind::ServiceRequest) << "\n"
              << "dds_reply: "
              << fqn::to_dds_name(text, fqn::DdsKind::ServiceReply) << "\n";
  } else {
    std::cout << "dds_topic: " << fqn::to_dds_name(text, fqn::DdsKind::Topic)
              << "\n";
  }
}

int cmd_fqn_check(const std::string& name) {
  fqn::FqnTuple tuple = fqn::parse_fqn(name);
  print_tuple(tuple);
  return 0;
}

struct BuildArgs {
  std::string scope = "global";
  std::string agent;
  bool agent_auto = false;
  std::string component;
  std::string stream;
  std::string resource;
  std::string kind;
};

int cmd_fqn_build(const BuildArgs& args) {
  fqn::FqnBuilder builder;
  builder.scope(args.scope == "local" ? fqn::Scope::Local
                                      : fqn::Scope::Global);
  if (args.agent_auto) {
    std::optional<std::string> env;
    if (const char* value = std::getenv("SFG_AGENT_NAME")) env = value;
    builder.agent(fqn::resolve_agent_name(env, os_hostname()));
  } else if (!args.agent.empty()) {
    builder.agent(args.agent);
  }
  if (!args.component.empty()) builder.component(args.component);
  if (!args.stream.empty()) builder.stream(args.stream);
  builder.resource(args.resource);
  if (!args.kind.empty()) {
    if (args.kind == "topic") {
      builder.kind(fqn::ResourceKind::Topic);
    } else if (args.kind == "service") {
      builder.kind(fqn::ResourceKind::Service);
    } else if (args.kind == "action") {
      builder.kind(fqn::ResourceKind::Action);
    } else {
      throw fqn::ParseError("unknown kind '" + args.kind + "'");
    }
  }
  print_tuple(builder.tuple());
  return 0;
}

int cmd_traj_sample(const std::string& scene_path, const std::string& name,
                    double t) {
  traj::Scene scene = traj::load_scene_file(scene_path);
  for (const traj::Trajectory& trajectory : scene) {
    if (trajectory.name != name) continue;
    traj::Pose pose = traj::sample(trajectory, t);
    std::cout << "trajectory: " << name << "\n"
              << "frame: " << trajectory.frame << "\n"
              << "t: " << harness::format_number(t) << "\n"
              << "position: [" << harness::format_number(pose.position.x)
              << ", " << harness::format_number(pose.position.y) << ", "
              << harness::format_number(pose.position.z) << "]\n"
              << "orientation_wxyz: ["
              << harness::format_number(pose.orientation.w) << ", "
              << harness::format_number(pose.orientation.x) << ", "
              << harness::format_number(pose.orientation.y) << ", "
              << harness::format_number(pose.orientation.z) << "]\n";
    return 0;
  }
  throw traj::SchemaError("no trajectory named '" + name + "' in scene");
}

int cmd_codec_roundtrip(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw codec::CorruptStream("cannot open '" + path + "'");
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  codec::DepthFrame frame = codec::frame_from_bytes(bytes);
  codec::ScanKernel kernel =
      codec::resolve_scan_kernel(codec::ScanKernel::Auto);
  codec::CompressedBlob blob = codec::rvl_compress(frame, kernel);
  codec::DepthFrame back = codec::rvl_decompress(blob);
  if (!(back == frame)) {
    std::cerr << "roundtrip mismatch\n";
    return 1;
  }
  double raw = static_cast<double>(frame.values.size() * 2);
  std::cout << "ok: " << frame.width << "x" << frame.height
            << " raw_bytes=" << frame.values.size() * 2
            << " compressed_bytes=" << blob.bytes.size() << " ratio="
            << harness::format_number(
                   raw > 0 ? static_cast<double>(blob.bytes.size()) / raw : 0.0)
            << " kernel="
            << (kernel == codec::ScanKernel::Avx2 ? "avx2" : "scalar") << "\n";
  return 0;
}

int cmd_sim(const std::string& experiment, const std::string& scenario_path,
            std::optional<uint64_t> seed, const std::string& out_path,
            const std::string& summary_path) {
  harness::Scenario scenario = scenario_path.empty()
                                   ? harness::default_scenario()
                                   : harness::load_scenario_file(scenario_path);
  if (seed) scenario.seed = *seed;
  harness::ExperimentResult result =
      harness::run_experiment(experiment, scenario);
  std::string csv = harness::to_csv(result);
  if (out_path.empty()) {
    std::cout << csv;
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw harness::ConfigError("cannot write '" + out_path + "'");
    out << csv;
  }
  if (!summary_path.empty()) {
    std::ofstream out(summary_path, std::ios::binary);
    if (!out) throw harness::ConfigError("cannot write '" + summary_path + "'");
    out << harness::summary_json(result).dump(2) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent pub/sub framework simulator and tooling"};
  app.require_subcommand(1);

  // sim e1|e2|e3
  CLI::App* sim = app.add_subcommand("sim", "Run a scaling/latency experiment");
  sim->require_subcommand(1);
  std::string scenario_path, out_path, summary_path;
  std::optional<uint64_t> seed;
  for (const char* name : {"e1", "e2", "e3"}) {
    CLI::App* exp = sim->add_subcommand(
        name, std::string("Experiment ") + name);
    exp->add_option("--scenario", scenario_path, "Scenario YAML file");
    exp->add_option("--seed", seed, "Deterministic seed");
    exp->add_option("--out", out_path, "Metrics CSV output (default stdout)");
    exp->add_option("--summary", summary_path, "JSON summary output");
  }

  // fqn check/build
  CLI::App* fqn_cmd = app.add_subcommand("fqn", "Fully qualified name tools");
  fqn_cmd->require_subcommand(1);
  std::string check_name;
  CLI::App* check = fqn_cmd->add_subcommand("check", "Validate and parse a name");
  check->add_option("name", check_name, "FQN text, e.g. /global/agent_heartbeat")
      ->required();
  BuildArgs build_args;
  CLI::App* build = fqn_cmd->add_subcommand("build", "Build a name from segments");
  build->add_option("--scope", build_args.scope, "local|global");
  build->add_option("--agent", build_args.agent, "Agent segment");
  build->add_flag("--agent-auto", build_args.agent_auto,
                  "Resolve agent from SFG_AGENT_NAME or the hostname");
  build->add_option("--component", build_args.component, "Component segment");
  build->add_option("--stream", build_args.stream, "Stream segment");
  build->add_option("--resource", build_args.resource, "Resource segment")
      ->required();
  build->add_option("--kind", build_args.kind, "topic|service|action");

  // traj sample
  CLI::App* traj_cmd = app.add_subcommand("traj", "Trajectory tools");
  traj_cmd->require_subcommand(1);
  CLI::App* sample = traj_cmd->add_subcommand("sample", "Sample a scene trajectory");
  std::string scene_path, traj_name;
  double sample_t = 0;
  sample->add_option("--scene", scene_path, "Scene YAML file")->required();
  sample->add_option("--name", traj_name, "Trajectory name")->required();
  sample->add_option("--t", sample_t, "Sample time in seconds")->required();

  // codec roundtrip
  CLI::App* codec_cmd = app.add_subcommand("codec", "Depth codec tools");
  codec_cmd->require_subcommand(1);
  CLI::App* roundtrip =
      codec_cmd->add_subcommand("roundtrip", "Compress/decompress a frame dump");
  std::string frame_path;
  roundtrip->add_option("--in", frame_path, "Frame dump file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (check->parsed()) return cmd_fqn_check(check_name);
    if (build->parsed()) return cmd_fqn_build(build_args);
    if (sample->parsed()) return cmd_traj_sample(scene_path, traj_name, sample_t);
    if (roundtrip->parsed()) return cmd_codec_roundtrip(frame_path);
    for (const char* name : {"e1", "e2", "e3"}) {
      if (sim->get_subcommand(name)->parsed()) {
        return cmd_sim(name, scenario_path, seed, out_path, summary_path);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "no command\n";
  return 2;
}
