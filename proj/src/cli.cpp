#include "failscope/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#include "failscope/evaluation.hpp"
#include "failscope/generators.hpp"
#include "failscope/io.hpp"
#include "failscope/rules.hpp"
#include "failscope/subjects.hpp"

namespace failscope {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::size_t workers = 1;
  std::string strategy;
  std::string subject;
  std::optional<std::size_t> budget_execs;
  std::optional<Scalar> budget_time;
  std::optional<Scalar> exec_cost;
  std::string feature_policy;
  std::string input;  // dataset, model or report file
  std::optional<std::size_t> n_tests;
};

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  try {
    auto j = json::parse(read_text_file(path));
    if (!j.is_object()) raise(ErrorCode::InvalidConfig, "config must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    raise(ErrorCode::ParseError, "cannot parse '" + path + "': " + e.what());
  }
}

// Flag, then FAILSCOPE_SEED, then the config's "seeds"/"seed", then 0.
std::vector<std::uint64_t> resolve_seeds(const Options& o, const json& cfg) {
  if (o.seed) return {*o.seed};
  if (const char* env = std::getenv("FAILSCOPE_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument(env);
      return {v};
    } catch (const std::exception&) {
      raise(ErrorCode::InvalidConfig, std::string("FAILSCOPE_SEED is not an integer: ") + env);
    }
  }
  try {
    if (cfg.contains("seeds")) {
      auto s = cfg.at("seeds").get<std::vector<std::uint64_t>>();
      if (s.empty()) raise(ErrorCode::InvalidConfig, "seeds must be non-empty");
      return s;
    }
    if (cfg.contains("seed")) return {cfg.at("seed").get<std::uint64_t>()};
  } catch (const json::exception& e) {
    raise(ErrorCode::InvalidConfig, std::string("bad seeds: ") + e.what());
  }
  return {0};
}

std::string resolve_subject(const Options& o, const json& cfg) {
  if (!o.subject.empty()) return o.subject;
  if (cfg.contains("subject") && cfg.at("subject").is_string()) return cfg.at("subject");
  raise(ErrorCode::InvalidConfig, "no subject given");
}

Subject load_subject(const Options& o, const json& cfg) {
  const auto name = resolve_subject(o, cfg);
  const json params = cfg.value("subject_params", json::object());
  return make_subject(name, params);
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) raise(ErrorCode::InvalidConfig, "cannot create '" + dir + "': " + ec.message());
}

std::string path_in(const std::string& dir, const std::string& file) { return (fs::path(dir) / file).string(); }

// ------------------------------------------------------------------ generate

int cmd_generate(const Options& o, std::ostream& out) {
  const json cfg = load_config(o.config);
  const Subject subject = load_subject(o, cfg);
  GeneratorConfig base;
  std::string label = "RS";
  ExecutionBudget proto;
  std::size_t max_execs = 1000000;
  Scalar max_time = 4500.0;
  Scalar exec_cost = subject.exec_cost;
  try {
    base = generator_from_json(cfg.value("generator", json::object()));
    label = o.strategy.empty() ? cfg.value("strategy", std::string("RS")) : o.strategy;
    const json budget = cfg.value("budget", json::object());
    max_execs = budget.value("max_executions", max_execs);
    max_time = budget.value("max_time", max_time);
    exec_cost = budget.value("exec_cost", exec_cost);
  } catch (const json::exception& e) {
    raise(ErrorCode::InvalidConfig, std::string("bad config: ") + e.what());
  }
  if (o.budget_execs) max_execs = *o.budget_execs;
  if (o.budget_time) max_time = *o.budget_time;
  if (o.exec_cost) exec_cost = *o.exec_cost;
  const GeneratorConfig gcfg = parse_strategy(label, base);
  gcfg.validate();
  const auto seeds = resolve_seeds(o, cfg);
  [[maybe_unused]] const ExecutionBudget check(max_execs, max_time, exec_cost);  // validates before any work
  ensure_dir(o.out);

  const std::string stem = subject.name + "_" + strategy_label(gcfg);
  for (auto seed : seeds) {
    ExecutionBudget budget(max_execs, max_time, exec_cost);
    Rng rng = Rng(seed).split(subject.name).split("generate");
    const auto res = generate(subject, gcfg, budget, rng);
    const std::string base_name = stem + "_seed" + std::to_string(seed);
    write_text_file(path_in(o.out, base_name + ".csv"), dataset_to_csv(res.dataset));
    std::string trace;
    for (const auto& ev : trace_to_json(res.trace)) trace += ev.dump() + "\n";
    write_text_file(path_in(o.out, base_name + ".trace.jsonl"), trace);
    if (res.final_tree) write_text_file(path_in(o.out, base_name + ".tree.json"), res.final_tree->to_json().dump(2) + "\n");
    out << base_name << ": " << res.dataset.size() << " rows (" << res.dataset.count(RowSource::Executed) << " executed, "
        << res.dataset.count(RowSource::Predicted) << " predicted), " << res.consumed_time << " s simulated\n";
  }
  return kExitOk;
}

// --------------------------------------------------------------------- learn

int cmd_learn(const Options& o, std::ostream& out) {
  const json cfg = load_config(o.config);
  const Subject subject = load_subject(o, cfg);
  const std::string policy_name =
      !o.feature_policy.empty() ? o.feature_policy : cfg.value("feature_policy", std::string("auto_select"));
  const FeaturePolicy policy = feature_policy_from_string(policy_name);
  const auto seed = resolve_seeds(o, cfg).front();
  if (o.input.empty()) raise(ErrorCode::InvalidConfig, "learn needs a dataset file");
  const LabeledDataset ds = read_dataset_csv_file(o.input, subject.space);
  const BinarizedDataset data = binarize(ds);
  const auto fails = std::count(data.labels.begin(), data.labels.end(), Verdict::Fail);
  if (fails == 0 || static_cast<std::size_t>(fails) == data.size())
    raise(ErrorCode::SingleClass, "dataset holds a single class; no failure model can be learned");
  ensure_dir(o.out);

  std::optional<FeatureSelection> selection;
  if (policy == FeaturePolicy::AutoSelect && subject.sum_features) {
    Rng trng = Rng(seed).split(subject.name).split("selection_tests");
    const auto tests = make_test_set(subject, 1000, trng);
    Rng srng = Rng(seed).split(subject.name).split("selection");
    selection = auto_select_features(data, tests, {}, srng);
    write_text_file(path_in(o.out, "feature_selection.json"), selection->table().dump(2) + "\n");
  }
  const FeatureSet features = features_for(policy, subject, selection ? &*selection : nullptr);
  Rng tune_rng = Rng(seed).split(subject.name).split("rule_tuning");
  const auto params = tune_rule_learner(data, features, 3, tune_rng).best;
  Rng learn_rng = Rng(seed).split(subject.name).split("rules");
  const RuleSet rs = learn_ruleset(data, features, params, learn_rng);

  write_text_file(path_in(o.out, "rules.json"), to_json(rs).dump(2) + "\n");
  std::string text = render(rs, subject.references) + "\n\nMinimised 100%-confidence fail rules:\n";
  for (const auto& r : minimize_rules(extract_fail_rules(rs), subject.space)) text += render(r, subject.references) + "\n";
  write_text_file(path_in(o.out, "rules.txt"), text);
  out << text;
  return kExitOk;
}

// ------------------------------------------------------------------ evaluate

int cmd_evaluate(const Options& o, std::ostream& out) {
  const json cfg = load_config(o.config);
  const Subject subject = load_subject(o, cfg);
  const std::size_t n_tests = o.n_tests ? *o.n_tests : cfg.value("n_tests", std::size_t{10000});
  if (n_tests == 0) raise(ErrorCode::InvalidConfig, "n_tests must be positive");
  const auto seed = resolve_seeds(o, cfg).front();
  if (o.input.empty()) raise(ErrorCode::InvalidConfig, "evaluate needs a rules or tree file");
  json model;
  try {
    model = json::parse(read_text_file(o.input));
  } catch (const json::parse_error& e) {
    raise(ErrorCode::ParseError, "cannot parse '" + o.input + "': " + e.what());
  }
  Rng rng = Rng(seed).split(subject.name).split("tests");
  const auto tests = make_test_set(subject, n_tests, rng);
  MetricReport m;
  if (model.is_object() && model.contains("schema_version")) {
    const RuleSet rs = ruleset_from_json(model);
    if (rs.variables.size() != subject.space.size()) raise(ErrorCode::ParseError, "rules do not match the subject's input space");
    m = evaluate_model(rs, tests);
  } else {
    ClassTreeModel tree;
    try {
      tree = ClassTreeModel::from_json(model);
    } catch (const json::exception& e) {
      raise(ErrorCode::ParseError, std::string("not a rules or tree file: ") + e.what());
    }
    if (!(tree.encoder.space() == subject.space)) raise(ErrorCode::ParseError, "tree does not match the subject's input space");
    m = evaluate_model(tree, tests);
  }
  const std::string text = m.to_json().dump(2) + "\n";
  ensure_dir(o.out);
  write_text_file(path_in(o.out, "metrics.json"), text);
  out << text;
  return kExitOk;
}

// ------------------------------------------------------------------- compare

int cmd_compare(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.config.empty()) raise(ErrorCode::InvalidConfig, "compare needs --config with an experiment plan");
  const json cfg = load_config(o.config);
  ExperimentPlan plan = ExperimentPlan::from_json(cfg);
  if (o.seed) plan.seeds = {*o.seed};
  else if (std::getenv("FAILSCOPE_SEED")) plan.seeds = resolve_seeds(o, json::object());
  if (o.workers > 1) plan.workers = o.workers;
  if (o.budget_execs) plan.max_executions = *o.budget_execs;
  if (o.budget_time) plan.max_time = *o.budget_time;
  if (o.exec_cost) plan.exec_cost = *o.exec_cost;
  if (!o.feature_policy.empty()) plan.feature_policy = feature_policy_from_string(o.feature_policy);
  plan.validate();
  const auto catalog = builtin_catalog(plan.subject_overrides);
  const auto report = run_experiment(plan, catalog);
  ensure_dir(o.out);
  write_text_file(path_in(o.out, "report.json"), report.to_json().dump(2) + "\n");
  const auto md = report.to_markdown();
  write_text_file(path_in(o.out, "report.md"), md);
  out << md;
  const auto failed = report.failed_runs();
  for (const auto& r : report.runs)
    if (!r.ok) err << "warning: " << r.subject << " " << r.strategy << " seed " << r.seed << " failed: " << r.error << "\n";
  if (failed == report.runs.size()) {
    err << "error: all runs failed\n";
    return kExitRuntime;
  }
  return kExitOk;
}

// ------------------------------------------------------------------ subjects

int cmd_subjects(const Options& o, std::ostream& out) {
  const json cfg = load_config(o.config);
  const auto catalog = builtin_catalog(cfg.value("subject_params", json::object()));
  for (const auto& [name, s] : catalog) {
    out << name << ": " << s.space.size() << " inputs, fitness in [" << s.bounds.lower << ", " << s.bounds.upper
        << "], exec_cost " << s.exec_cost << (s.sum_features ? ", sum features" : "") << "\n";
    for (const auto& v : s.space.variables()) {
      out << "  " << v.name();
      if (v.is_real()) out << " [" << v.range().lower << ", " << v.range().upper << "]\n";
      else {
        out << " {";
        for (std::size_t k = 0; k < v.symbols().size(); ++k) out << (k ? ", " : "") << v.symbols()[k];
        out << "}\n";
      }
    }
  }
  return kExitOk;
}

// -------------------------------------------------------------------- pareto

int cmd_pareto(const Options& o, std::ostream& out) {
  if (o.input.empty()) raise(ErrorCode::InvalidConfig, "pareto needs a report file");
  json report;
  try {
    report = json::parse(read_text_file(o.input));
  } catch (const json::parse_error& e) {
    raise(ErrorCode::ParseError, "cannot parse '" + o.input + "': " + e.what());
  }
  out << pareto_from_report(report).dump(2) << "\n";
  return kExitOk;
}

int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::ParseError:
    case ErrorCode::InvalidInput:
    case ErrorCode::SpaceMismatch:
    case ErrorCode::TooManyVariables:
      return kExitConfig;
    default:
      return kExitRuntime;
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Failure-model generation and learning for systems with expensive executions"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON config file");
    sub->add_option("--seed", o.seed, "Seed (overrides FAILSCOPE_SEED and the config)");
    sub->add_option("--out", o.out, "Output directory");
  };
  auto* gen = app.add_subcommand("generate", "Generate labelled datasets, one per seed");
  common(gen);
  gen->add_option("--subject", o.subject, "Subject name");
  gen->add_option("--strategy", o.strategy, "SA_<TYPE>, SA_DYN, RT_GUIDED, LR_GUIDED, SOTA or RS");
  gen->add_option("--budget-execs", o.budget_execs, "Maximum executions");
  gen->add_option("--budget-time", o.budget_time, "Maximum simulated seconds");
  gen->add_option("--exec-cost", o.exec_cost, "Simulated seconds per execution");

  auto* learn = app.add_subcommand("learn", "Learn a rule-based failure model from a dataset");
  common(learn);
  learn->add_option("dataset", o.input, "Dataset CSV")->required();
  learn->add_option("--subject", o.subject, "Subject the dataset was generated on");
  learn->add_option("--feature-policy", o.feature_policy, "individual, sum_subsets or auto_select");

  auto* eval = app.add_subcommand("evaluate", "Score a rules or tree file against ground truth");
  common(eval);
  eval->add_option("model", o.input, "rules.json or tree JSON")->required();
  eval->add_option("--subject", o.subject, "Subject name");
  eval->add_option("--n-tests", o.n_tests, "Number of fresh test inputs (default 10000)");

  auto* cmp = app.add_subcommand("compare", "Run an experiment plan and write reports");
  common(cmp);
  cmp->add_option("--workers", o.workers, "Worker threads");
  cmp->add_option("--budget-execs", o.budget_execs, "Maximum executions");
  cmp->add_option("--budget-time", o.budget_time, "Maximum simulated seconds");
  cmp->add_option("--exec-cost", o.exec_cost, "Simulated seconds per execution");
  cmp->add_option("--feature-policy", o.feature_policy, "individual, sum_subsets or auto_select");

  auto* subs = app.add_subcommand("subjects", "List the subject catalog");
  subs->add_option("--config", o.config, "JSON config with subject_params");

  auto* par = app.add_subcommand("pareto", "Recompute Pareto fronts from a report");
  par->add_option("report", o.input, "report.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (gen->parsed()) return cmd_generate(o, out);
    if (learn->parsed()) return cmd_learn(o, out);
    if (eval->parsed()) return cmd_evaluate(o, out);
    if (cmp->parsed()) return cmd_compare(o, out, err);
    if (subs->parsed()) return cmd_subjects(o, out);
    if (par->parsed()) return cmd_pareto(o, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace failscope
