#include "triage/cli/cli.hpp"

#include <CLI11.hpp>
#include <pthread.h>
#include <signal.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "triage/common/error.hpp"
#include "triage/dialogue/planning.hpp"
#include "triage/dialogue/session.hpp"
#include "triage/infer/engine.hpp"
#include "triage/infer/infer_json.hpp"
#include "triage/kbase/kb_json.hpp"
#include "triage/kbase/seed.hpp"
#include "triage/learn/dataset.hpp"
#include "triage/learn/mlp.hpp"
#include "triage/learn/pso.hpp"
#include "triage/service/service.hpp"

namespace triage::cli {

using nlohmann::json;

namespace {

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  const int n = std::snprintf(nullptr, 0, f, args...);
  std::string s(static_cast<std::size_t>(n) + 1, '\0');
  std::snprintf(s.data(), s.size(), f, args...);
  s.resize(static_cast<std::size_t>(n));
  return s;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
}

kbase::KnowledgeBase kb_or_seed(const std::string& path) {
  return path.empty() ? kbase::seed_default() : kbase::load_kb_file(path);
}

struct Options {
  bool json_out = false;

  std::string config_path;
  int port = -1;
  std::string store_dir;

  std::string out_path;
  bool media = false;
  std::string validate_path;

  std::string kb_path;
  std::string transcript_path;

  std::string method;
  std::uint64_t seed = 0;
  double noise = 0.0;
  int n_per_condition = 50;
  int epochs = 500;
  int hidden = 16;
  double learning_rate = 0.5;
  int swarm = 30;
  int iterations = -1;

  int patients = 200;
  int ants = 20;
  std::string policy;
};

int cmd_serve(const Options& o, std::ostream& out) {
  service::ApiConfig config;
  if (!o.config_path.empty()) config = service::config_from_json(read_json_file(o.config_path));
  if (o.port >= 0) config.port = o.port;
  if (!o.store_dir.empty()) config.store_dir = o.store_dir;
  config.validate();

  // Block before the server spawns threads so they inherit the mask.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  service::Service svc(config);
  const int port = svc.start();
  if (o.json_out)
    out << json{{"host", config.host}, {"port", port}, {"store_dir", config.store_dir}}.dump() << "\n";
  else
    out << "listening on http://" << config.host << ":" << port << " (store " << config.store_dir << ")\n";
  out.flush();
  int sig = 0;
  sigwait(&set, &sig);
  svc.stop();
  if (!o.json_out) out << "stopped\n";
  return kExitOk;
}

int cmd_kb_seed(const Options& o, std::ostream& out) {
  auto kb = kbase::seed_default();
  if (o.media) kb = kbase::with_media_extension(kb);
  kbase::save_kb_file(kb, o.out_path);
  const json summary = {{"path", o.out_path},
                        {"version", kb.version()},
                        {"symptoms", kb.symptoms().size()},
                        {"condition_rules", kb.condition_rules().size()},
                        {"indicator_rules", kb.indicator_rules().size()}};
  if (o.json_out)
    out << summary.dump() << "\n";
  else
    out << "wrote " << o.out_path << ": " << kb.condition_rules().size() << " conditions, "
        << kb.indicator_rules().size() << " indicators, " << kb.symptoms().size() << " symptoms\n";
  return kExitOk;
}

int cmd_kb_validate(const Options& o, std::ostream& out) {
  const auto kb = kbase::load_kb_file(o.validate_path);
  const auto report = kbase::validate(kb);
  if (o.json_out) {
    out << json(report).dump() << "\n";
  } else {
    for (const auto& i : report.issues)
      out << (i.severity == kbase::IssueSeverity::Error ? "error" : "warning") << ": " << i.message
          << (i.location.empty() ? "" : " (" + i.location + ")") << "\n";
    out << (report.ok ? "ok" : fmt("%zu error(s)", report.error_count())) << "\n";
  }
  return report.ok ? kExitOk : kExitFailure;
}

int cmd_diagnose(const Options& o, std::ostream& out) {
  const auto kb = kb_or_seed(o.kb_path);
  const auto transcript = infer::transcript_from_json(read_json_file(o.transcript_path));
  infer::ObservationSet obs;
  for (const auto& t : transcript) obs.add(t.symptom_id, t.value);
  const auto decision = infer::triage(kb, obs, {}, static_cast<int>(transcript.size()));
  out << (o.json_out ? json(decision).dump() : json(decision).dump(2)) << "\n";
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  const auto kb = kbase::seed_default();
  const auto data = learn::generate_synthetic_cases(kb, o.n_per_condition, o.noise, o.seed, kbase::daily_condition_ids());
  learn::Layout layout{data.symptom_ids.size(), static_cast<std::size_t>(o.hidden), data.condition_ids.size()};
  learn::Mlp mlp;
  std::vector<double> curve;
  if (o.method == "backprop") {
    auto r = learn::train_backprop(layout, data, o.iterations > 0 ? o.iterations : o.epochs, o.learning_rate, o.seed);
    mlp = std::move(r.mlp);
    curve = std::move(r.loss_curve);
  } else {
    learn::PsoParams p;
    p.swarm = o.swarm;
    if (o.iterations > 0) p.iterations = o.iterations;
    p.seed = o.seed;
    auto r = learn::train_pso(layout, data, p);
    mlp = std::move(r.mlp);
    curve = std::move(r.gbest_curve);
  }
  const double final_loss = learn::loss(mlp, data);
  const double acc = learn::accuracy(mlp, data);
  if (!o.out_path.empty()) {
    std::ofstream f(o.out_path);
    if (!f) throw Error(ErrorCode::IoFailure, "cannot write " + o.out_path);
    f << json{{"symptom_ids", data.symptom_ids}, {"condition_ids", data.condition_ids}, {"mlp", learn::mlp_to_json(mlp)}}
             .dump()
      << "\n";
  }
  if (o.json_out) {
    out << json{{"method", o.method},     {"seed", o.seed},       {"noise", o.noise},
                {"rows", data.size()},    {"steps", curve.size()}, {"final_loss", final_loss},
                {"accuracy", acc}}
               .dump()
        << "\n";
  } else {
    out << fmt("method %s  seed %llu  noise %.3f  rows %zu\n", o.method.c_str(),
               static_cast<unsigned long long>(o.seed), o.noise, data.size());
    out << fmt("steps %zu  final loss %.6f  training accuracy %.4f\n", curve.size(), final_loss, acc);
  }
  return kExitOk;
}

int cmd_plan(const Options& o, std::ostream& out) {
  const auto kb = kb_or_seed(o.kb_path);
  dialogue::PlanResult r;
  if (o.method == "aco") {
    dialogue::AcoParams p;
    p.ants = o.ants;
    if (o.iterations > 0) p.iterations = o.iterations;
    p.population_size = o.patients;
    p.seed = o.seed;
    r = dialogue::plan_question_order_aco(kb, {}, p);
  } else {
    r = dialogue::brute_force_best_order(kb, {}, o.seed, o.patients);
  }
  if (o.json_out) {
    out << json{{"method", o.method},
                {"seed", o.seed},
                {"order", r.order},
                {"expected_cost", r.expected_cost},
                {"orderings_evaluated", r.orderings_evaluated},
                {"best_curve", r.best_curve}}
               .dump()
        << "\n";
  } else {
    out << fmt("method %s  seed %llu  patients %d\n", o.method.c_str(), static_cast<unsigned long long>(o.seed),
               o.patients);
    out << fmt("expected questions %.6f  orderings evaluated %zu\n", r.expected_cost, r.orderings_evaluated);
    for (std::size_t i = 0; i < r.order.size(); ++i) out << fmt("%3zu  %s\n", i + 1, r.order[i].c_str());
  }
  return kExitOk;
}

struct Tally {
  int n = 0, correct = 0, diagnose = 0, refer = 0, more = 0;
  long questions = 0;
};

int cmd_simulate(const Options& o, std::ostream& out) {
  const auto kb = kb_or_seed(o.kb_path);
  const infer::TriageThresholds thresholds;
  const infer::Engine engine(kb);
  const auto patients = dialogue::sample_population(kb, engine, o.patients, o.seed);

  std::vector<std::string> planned;
  if (o.policy == "aco") {
    dialogue::AcoParams p;
    p.ants = o.ants;
    if (o.iterations > 0) p.iterations = o.iterations;
    p.seed = o.seed + 1;  // plan on a different population than the one scored
    planned = dialogue::plan_question_order_aco(kb, thresholds, p).order;
  }
  std::mt19937_64 session_seeds(o.seed);

  std::map<std::string, Tally> by_condition;
  Tally total;
  for (const auto& patient : patients) {
    dialogue::Policy policy = dialogue::Greedy{};
    if (o.policy == "aco") policy = dialogue::Planned{planned};
    if (o.policy == "random") policy = dialogue::Random{session_seeds()};
    auto s = dialogue::start_session({}, policy);
    while (auto q = dialogue::next_question(s, kb, thresholds)) {
      const bool present = patient.truth[*engine.symptom_index(*q)] == infer::State::Present;
      dialogue::submit_answer(s, kb, *q,
                              present ? infer::ObservationValue::present() : infer::ObservationValue::absent());
    }
    const auto& d = dialogue::finalize(s, kb, thresholds);
    const auto& truth = engine.condition_id(patient.condition);
    for (Tally* t : {&by_condition[truth], &total}) {
      ++t->n;
      t->questions += static_cast<long>(s.asked.size());
      if (!d.top_k.empty() && d.top_k.front().condition_id == truth) ++t->correct;
      if (d.kind == infer::DecisionKind::Diagnose) ++t->diagnose;
      if (d.kind == infer::DecisionKind::ReferToFacility) ++t->refer;
      if (d.kind == infer::DecisionKind::RequestMoreData) ++t->more;
    }
  }

  auto row = [](const Tally& t) {
    return json{{"patients", t.n},
                {"top1_correct", t.correct},
                {"accuracy", t.n ? static_cast<double>(t.correct) / t.n : 0.0},
                {"mean_questions", t.n ? static_cast<double>(t.questions) / t.n : 0.0},
                {"diagnose", t.diagnose},
                {"refer", t.refer},
                {"request_more_data", t.more}};
  };
  if (o.json_out) {
    json table = json::object();
    for (const auto& [id, t] : by_condition) table[id] = row(t);
    out << json{{"policy", o.policy}, {"patients", o.patients}, {"seed", o.seed},
                {"mean_questions", row(total)["mean_questions"]}, {"accuracy", row(total)["accuracy"]},
                {"conditions", table}}
               .dump()
        << "\n";
    return kExitOk;
  }
  out << fmt("policy %s  patients %d  seed %llu\n", o.policy.c_str(), o.patients,
             static_cast<unsigned long long>(o.seed));
  out << fmt("mean questions %.4f  top-1 accuracy %.4f\n\n",
             total.n ? static_cast<double>(total.questions) / total.n : 0.0,
             total.n ? static_cast<double>(total.correct) / total.n : 0.0);
  out << fmt("%-22s %6s %8s %9s %10s %9s %6s %5s\n", "condition", "n", "correct", "accuracy", "questions", "diagnose",
             "refer", "more");
  for (const auto& [id, t] : by_condition)
    out << fmt("%-22s %6d %8d %9.4f %10.4f %9d %6d %5d\n", id.c_str(), t.n, t.correct,
               static_cast<double>(t.correct) / t.n, static_cast<double>(t.questions) / t.n, t.diagnose, t.refer,
               t.more);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Symptom triage toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_flag("--json", o.json_out, "Machine-readable output");

  auto* serve = app.add_subcommand("serve", "Run the HTTP service until SIGINT/SIGTERM");
  serve->add_option("--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
  serve->add_option("--port", o.port, "Override the configured port")->check(CLI::Range(0, 65535));
  serve->add_option("--store", o.store_dir, "Override the store directory");

  auto* kb = app.add_subcommand("kb", "Knowledge base tools");
  kb->require_subcommand(1);
  auto* seed = kb->add_subcommand("seed", "Write the seeded knowledge base");
  seed->add_option("--out", o.out_path, "Output path")->required();
  seed->add_flag("--media", o.media, "Include the media-branch conditions");
  auto* validate = kb->add_subcommand("validate", "Validate a knowledge base file");
  validate->add_option("path", o.validate_path, "Knowledge base JSON")->required();

  auto* diagnose = app.add_subcommand("diagnose", "Triage an answer transcript");
  diagnose->add_option("--kb", o.kb_path, "Knowledge base JSON (default: seed)");
  diagnose->add_option("--transcript", o.transcript_path, "Transcript JSON")->required();

  auto* train = app.add_subcommand("train", "Train the classifier on synthetic cases");
  train->add_option("--method", o.method)->required()->check(CLI::IsMember({"backprop", "pso"}));
  train->add_option("--seed", o.seed);
  train->add_option("--noise", o.noise)->check(CLI::Range(0.0, 1.0));
  train->add_option("--n-per-condition", o.n_per_condition)->check(CLI::PositiveNumber);
  train->add_option("--epochs", o.epochs)->check(CLI::PositiveNumber);
  train->add_option("--iterations", o.iterations, "PSO iterations or backprop epochs")->check(CLI::PositiveNumber);
  train->add_option("--hidden", o.hidden)->check(CLI::PositiveNumber);
  train->add_option("--lr", o.learning_rate)->check(CLI::PositiveNumber);
  train->add_option("--swarm", o.swarm)->check(CLI::PositiveNumber);
  train->add_option("--out", o.out_path, "Write the trained model here");

  auto* plan = app.add_subcommand("plan-questions", "Search for a question ordering");
  plan->add_option("--method", o.method)->required()->check(CLI::IsMember({"aco", "brute"}));
  plan->add_option("--seed", o.seed);
  plan->add_option("--kb", o.kb_path, "Knowledge base JSON (default: seed)");
  plan->add_option("--patients", o.patients, "Synthetic population size")->check(CLI::PositiveNumber);
  plan->add_option("--ants", o.ants)->check(CLI::PositiveNumber);
  plan->add_option("--iterations", o.iterations)->check(CLI::PositiveNumber);

  auto* simulate = app.add_subcommand("simulate", "Run synthetic patients through a question policy");
  simulate->add_option("--policy", o.policy)->required()->check(CLI::IsMember({"greedy", "aco", "random"}));
  simulate->add_option("--patients", o.patients)->check(CLI::PositiveNumber);
  simulate->add_option("--seed", o.seed);
  simulate->add_option("--kb", o.kb_path, "Knowledge base JSON (default: seed)");
  simulate->add_option("--ants", o.ants)->check(CLI::PositiveNumber);
  simulate->add_option("--iterations", o.iterations, "ACO iterations")->check(CLI::PositiveNumber);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (serve->parsed()) return cmd_serve(o, out);
    if (seed->parsed()) return cmd_kb_seed(o, out);
    if (validate->parsed()) return cmd_kb_validate(o, out);
    if (diagnose->parsed()) return cmd_diagnose(o, out);
    if (train->parsed()) return cmd_train(o, out);
    if (plan->parsed()) return cmd_plan(o, out);
    if (simulate->parsed()) return cmd_simulate(o, out);
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

int run_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace triage::cli
