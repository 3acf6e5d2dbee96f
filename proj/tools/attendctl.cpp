// attendctl: classroom attendance service, simulator and dataset tooling.

#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"

#include "attend/classroom_rig.hpp"
#include "attend/csv.hpp"
#include "attend/error.hpp"
#include "attend/http_api.hpp"
#include "attend/reference_stats.hpp"
#include "attend/roster.hpp"

namespace fs = std::filesystem;
using namespace attend;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

std::atomic<bool> g_interrupted{false};

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::io:
    case Errc::state:
    case Errc::protocol:
    case Errc::framing:
    case Errc::encode: return kExitRuntime;
    default: return kExitValidation;
  }
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, fmt::format("cannot read {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

stats::ReferenceTable load_table(const std::string& path) {
  if (path.empty()) return stats::published_means_table();
  return stats::ReferenceTable::from_csv(slurp(path));
}

sim::Scenario load_scenario_file(const std::string& path, std::optional<std::uint64_t> seed) {
  auto sc = sim::load_scenario(slurp(path));
  if (seed) sc.seed = *seed;
  return sc;
}

struct ServeArgs {
  std::string roster_dir, scenario, table, attendance, session, host = "127.0.0.1";
  std::optional<std::uint64_t> seed;
  int port = 8080;
  double speed = 1.0;
  std::int64_t until_ms = -1;
};

int serve(const ServeArgs& a) {
  session::ServiceConfig cfg;
  cfg.roster_dir = a.roster_dir;
  cfg.attendance_csv = a.attendance.empty() ? fs::path(a.roster_dir) / "attendance.csv" : fs::path(a.attendance);

  auto sc = load_scenario_file(a.scenario, a.seed);
  RigOptions opts;
  opts.fragment_seed = sc.seed;
  opts.keep_frame_log = false;
  ClassroomRig rig(std::move(sc), cfg, roster::load_roster(a.roster_dir), load_table(a.table), opts);
  rig.attach_host();

  api::HttpApi http(rig.service());
  const int port = http.start(a.host, a.port);
  spdlog::info("listening on http://{}:{}", a.host, port);

  std::signal(SIGINT, [](int) { g_interrupted = true; });
  std::signal(SIGTERM, [](int) { g_interrupted = true; });

  const auto tick = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double, std::milli>(rig.device().clock().tick().count() / a.speed));
  auto next = std::chrono::steady_clock::now();
  bool session_pending = !a.session.empty();
  while (!g_interrupted) {
    if (a.until_ms >= 0 && rig.device().clock().steady().count() >= a.until_ms) break;
    rig.step();
    // After the first tick so a CLOCK action at t=0 has taken effect.
    if (session_pending) {
      session_pending = false;
      rig.service().start_session(a.session);
    }
    next += tick;
    std::this_thread::sleep_until(next);
  }
  http.stop();
  spdlog::info("stopped at t={}ms", rig.device().clock().steady().count());
  fmt::print("records={}\n", rig.service().all_records().size());
  return kExitOk;
}

int stats_build(const std::vector<std::string>& inputs, const std::string& out) {
  std::vector<std::vector<stats::RawRecord>> batches;
  for (const auto& path : inputs) {
    const auto text = slurp(path);
    const auto header = csv::read(text).header;
    const auto schema = stats::DatasetSchema::detect(header);
    if (!schema) throw Error(Errc::schema, fmt::format("{}: unrecognised dataset columns", path));
    auto result = stats::ingest_dataset(text, *schema);
    for (const auto& e : result.skipped) spdlog::warn("{}: row {}: {}", path, e.row_index, e.message);
    fmt::print("{}: {} records ({}), {} skipped\n", path, result.records.size(), stats::to_string(schema->kind),
               result.skipped.size());
    batches.push_back(std::move(result.records));
  }
  const auto sample = stats::filter_and_merge(batches);
  const auto table = stats::build_reference_table(sample);
  fmt::print("sample n={} male={} female={}\n", table.total_count(), table.male_count(), table.female_count());

  const fs::path tmp = out + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    f << table.to_csv();
    if (!f.flush()) throw Error(Errc::io, fmt::format("cannot write {}", tmp.string()));
  }
  fs::rename(tmp, out);
  return kExitOk;
}

int stats_gap(int age, const std::string& table_path) {
  const auto table = load_table(table_path);
  fmt::print("age {}: male mean is {:.1f}% above female\n", age, stats::gender_gap_percent(table, age));
  return kExitOk;
}

int sim_run(const std::string& scenario, std::int64_t until, std::optional<std::uint64_t> seed, bool dump) {
  sim::DeviceSim dev(load_scenario_file(scenario, seed));
  std::size_t frames = 0;
  while (dev.clock().steady().count() < until) {
    for (const auto& f : dev.tick()) {
      ++frames;
      if (dump) fmt::print("{:>8} {}", dev.clock().steady().count(), wire::encode(f));
    }
  }
  fmt::print("t={}ms frames={} lapsed_scans={}\n", dev.clock().steady().count(), frames, dev.lapsed_scans());
  for (const auto& c : dev.chairs()) fmt::print("chair {}: {}\n", c.id(), seat::state_name(c.state()));
  return kExitOk;
}

int report(const std::string& course, const std::string& roster_dir, const std::string& attendance) {
  const auto r = roster::load_roster(roster_dir);
  if (!r.find_course(course)) throw Error(Errc::not_found, fmt::format("unknown course '{}'", course));
  const fs::path path = attendance.empty() ? fs::path(roster_dir) / "attendance.csv" : fs::path(attendance);
  fmt::print("timestamp,course_id,uid,status\n");
  if (!fs::exists(path)) return kExitOk;
  session::AttendanceLog log(path, false);
  for (const auto& rec : log.for_course(course)) fmt::print("{}", session::AttendanceLog::format_row(rec));
  return kExitOk;
}

int validate(const std::string& roster_dir) {
  const auto r = roster::load_roster(roster_dir);
  for (const auto& s : r.students()) {
    if (!s.in_reference_range()) {
      spdlog::warn("{}: age {} is outside the reference table; presence checks will not confirm", s.uid.str(), s.age);
    }
  }
  fmt::print("ok: {} students, {} courses, {} enrollments\n", r.students().size(), r.courses().size(),
             r.enrollments().size());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Classroom attendance with RFID cards and chair weight sensors"};
  app.require_subcommand(1);
  int rc = kExitOk;

  ServeArgs sa;
  auto* serve_cmd = app.add_subcommand("serve", "Run the simulated classroom and the HTTP API");
  serve_cmd->add_option("--roster-dir", sa.roster_dir, "Directory with students/courses/enrollments CSVs")->required();
  serve_cmd->add_option("--scenario", sa.scenario, "Scenario file driving the device")->required();
  serve_cmd->add_option("--seed", sa.seed, "Override the scenario seed");
  serve_cmd->add_option("--port", sa.port, "HTTP port (0 picks a free one)");
  serve_cmd->add_option("--host", sa.host);
  serve_cmd->add_option("--table", sa.table, "Reference table CSV (default: published means)");
  serve_cmd->add_option("--attendance", sa.attendance, "Attendance CSV (default: <roster-dir>/attendance.csv)");
  serve_cmd->add_option("--speed", sa.speed, "Simulation speed relative to real time")->check(CLI::PositiveNumber);
  serve_cmd->add_option("--until", sa.until_ms, "Stop at this simulated time in ms");
  serve_cmd->add_option("--session", sa.session, "Open a session for this course once the device clock is set");

  auto* stats_cmd = app.add_subcommand("stats", "Reference weight table");
  stats_cmd->require_subcommand(1);
  std::vector<std::string> stats_in;
  std::string stats_out, gap_table;
  int gap_age = 0;
  auto* build_cmd = stats_cmd->add_subcommand("build", "Build the table from source datasets");
  build_cmd->add_option("--in", stats_in, "Dataset CSVs")->required()->delimiter(',');
  build_cmd->add_option("--out", stats_out, "Output table CSV")->required();
  auto* gap_cmd = stats_cmd->add_subcommand("gap", "Male-over-female mean weight gap for one age");
  gap_cmd->add_option("--age", gap_age)->required();
  gap_cmd->add_option("--table", gap_table, "Table CSV (default: published means)");

  std::string sim_scenario;
  std::int64_t sim_until = 0;
  std::optional<std::uint64_t> sim_seed;
  bool sim_dump = false;
  auto* sim_cmd = app.add_subcommand("sim", "Device simulator");
  sim_cmd->require_subcommand(1);
  auto* run_cmd = sim_cmd->add_subcommand("run", "Run a scenario without a host");
  run_cmd->add_option("--scenario", sim_scenario)->required();
  run_cmd->add_option("--until", sim_until, "Simulated ms")->required();
  run_cmd->add_option("--seed", sim_seed);
  run_cmd->add_flag("--dump-frames", sim_dump);

  std::string report_course, report_dir, report_csv;
  auto* report_cmd = app.add_subcommand("report", "Attendance records for one course");
  report_cmd->add_option("--course", report_course)->required();
  report_cmd->add_option("--roster-dir", report_dir)->required();
  report_cmd->add_option("--attendance", report_csv);

  std::string validate_dir;
  auto* validate_cmd = app.add_subcommand("validate", "Check roster CSVs");
  validate_cmd->add_option("--roster-dir", validate_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*serve_cmd) rc = serve(sa);
    else if (*build_cmd) rc = stats_build(stats_in, stats_out);
    else if (*gap_cmd) rc = stats_gap(gap_age, gap_table);
    else if (*run_cmd) rc = sim_run(sim_scenario, sim_until, sim_seed, sim_dump);
    else if (*report_cmd) rc = report(report_course, report_dir, report_csv);
    else if (*validate_cmd) rc = validate(validate_dir);
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitRuntime;
  }
  return rc;
}
