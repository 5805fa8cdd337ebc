#include "kidlab/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace kidlab {

namespace {

json model_config_to_json(const ModelConfig& c) {
  return {{"d_model", c.d_model}, {"n_heads", c.n_heads},
          {"n_layers", c.n_layers}, {"d_ff", c.d_ff},
          {"vocab_size", c.vocab_size}, {"max_len", c.max_len},
          {"dropout", c.dropout}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  c.d_model = j.at("d_model").get<int>();
  c.n_heads = j.at("n_heads").get<int>();
  c.n_layers = j.at("n_layers").get<int>();
  c.d_ff = j.at("d_ff").get<int>();
  c.vocab_size = j.at("vocab_size").get<int>();
  c.max_len = j.at("max_len").get<int>();
  c.dropout = j.at("dropout").get<double>();
  return c;
}

json run_config_to_json(const DistillConfig& r) {
  return {{"id", r.id},
          {"algorithm", algorithm_name(r.algorithm)},
          {"divergence", divergence_name(r.divergence)},
          {"alpha", r.alpha},
          {"mle_weight", r.mle_weight},
          {"kd_weight", r.kd_weight},
          {"steps", r.steps},
          {"batch_size", r.batch_size},
          {"lr", r.lr},
          {"seeds",
           {{"data", r.seeds.data},
            {"init", r.seeds.init},
            {"sampling", r.seeds.sampling}}},
          {"mask_strategy", mask_strategy_name(r.mask_strategy)},
          {"kid_masking_only", r.kid_masking_only},
          {"eval_interval", r.eval_interval}};
}

DistillConfig run_config_from_json(const json& j) {
  DistillConfig r;
  r.id = j.at("id").get<std::string>();
  r.algorithm = algorithm_from_name(j.at("algorithm").get<std::string>());
  r.divergence = divergence_from_name(j.at("divergence").get<std::string>());
  r.alpha = j.at("alpha").get<double>();
  r.mle_weight = j.at("mle_weight").get<double>();
  r.kd_weight = j.at("kd_weight").get<double>();
  r.steps = j.at("steps").get<int>();
  r.batch_size = j.at("batch_size").get<int>();
  r.lr = j.at("lr").get<double>();
  r.seeds.data = j.at("seeds").at("data").get<uint64_t>();
  r.seeds.init = j.at("seeds").at("init").get<uint64_t>();
  r.seeds.sampling = j.at("seeds").at("sampling").get<uint64_t>();
  r.mask_strategy =
      mask_strategy_from_name(j.at("mask_strategy").get<std::string>());
  r.kid_masking_only = j.at("kid_masking_only").get<bool>();
  r.eval_interval = j.at("eval_interval").get<int>();
  return r;
}

json metrics_report_to_json(const MetricsReport& report) {
  json per = json::array();
  for (const PerExampleEval& p : report.per_example)
    per.push_back({{"example_index", p.example_index},
                   {"predicted_sql", p.predicted_sql},
                   {"parse_ok", p.parse_ok},
                   {"ex_ok", p.ex_ok},
                   {"ts_ok", p.ts_ok}});
  json j{{"ex", report.ex},
         {"ts", report.ts},
         {"decode_mode", report.decode_mode},
         {"per_example", per}};
  if (report.exaccerr)
    j["exaccerr"] = *report.exaccerr;
  else
    j["exaccerr"] = nullptr;
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
}

std::string read_text(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string fmt_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::general, 10);
  return std::string(buf, ptr);
}

void refuse_overwrite(const std::string& path, bool force) {
  if (!force && fs::exists(path))
    throw std::runtime_error(path + " already exists (use --force to replace)");
}

struct LoadedWorld {
  ToyWorld world;
  const Vocabulary* vocab;
};

LoadedWorld load_world_for(const ExperimentSpec& spec) {
  std::string path = world_path(spec);
  if (!fs::exists(path))
    throw std::runtime_error("world file missing: " + path +
                             " (run gen-world first)");
  return {load_world(path), &Vocabulary::standard()};
}

}  // namespace

// ---------------------------------------------------------------------------
// Spec files
// ---------------------------------------------------------------------------

std::string spec_to_json_text(const ExperimentSpec& spec) {
  json runs = json::array();
  for (const DistillConfig& r : spec.runs) runs.push_back(run_config_to_json(r));
  json j{{"world",
          {{"seed", spec.world.seed},
           {"n_train", spec.world.n_train},
           {"n_eval", spec.world.n_eval}}},
         {"teacher",
          {{"config", model_config_to_json(spec.teacher.config)},
           {"steps", spec.teacher.steps},
           {"batch_size", spec.teacher.batch_size},
           {"lr", spec.teacher.lr},
           {"seed", spec.teacher.seed}}},
         {"student", model_config_to_json(spec.student)},
         {"runs", runs},
         {"eval",
          {{"ts_k", spec.eval.ts_k},
           {"exaccerr_horizon", spec.eval.exaccerr_horizon}}},
         {"output_dir", spec.output_dir}};
  return j.dump(2) + "\n";
}

ExperimentSpec spec_from_json_text(const std::string& text) {
  json j = json::parse(text);
  ExperimentSpec spec;
  spec.world.seed = j.at("world").at("seed").get<uint64_t>();
  spec.world.n_train = j.at("world").at("n_train").get<int>();
  spec.world.n_eval = j.at("world").at("n_eval").get<int>();
  spec.teacher.config = model_config_from_json(j.at("teacher").at("config"));
  spec.teacher.steps = j.at("teacher").at("steps").get<int>();
  spec.teacher.batch_size = j.at("teacher").at("batch_size").get<int>();
  spec.teacher.lr = j.at("teacher").at("lr").get<double>();
  spec.teacher.seed = j.at("teacher").at("seed").get<uint64_t>();
  spec.student = model_config_from_json(j.at("student"));
  for (const json& r : j.at("runs")) spec.runs.push_back(run_config_from_json(r));
  spec.eval.ts_k = j.at("eval").at("ts_k").get<int>();
  spec.eval.exaccerr_horizon = j.at("eval").at("exaccerr_horizon").get<int>();
  spec.output_dir = j.at("output_dir").get<std::string>();
  return spec;
}

ExperimentSpec load_spec(const std::string& path) {
  return spec_from_json_text(read_text(path));
}

void save_spec(const ExperimentSpec& spec, const std::string& path) {
  write_text(path, spec_to_json_text(spec));
}

RunSeeds derive_run_seeds(uint64_t student_seed) {
  return {hash_seed(student_seed, 0xda7a), hash_seed(student_seed, 0x1217),
          hash_seed(student_seed, 0x5a3b)};
}

ExperimentSpec default_experiment_spec(const std::string& output_dir) {
  const int vocab = Vocabulary::standard().size();
  ExperimentSpec spec;
  spec.world = {7, 2000, 300};
  spec.teacher.config = ModelConfig::teacher_preset(vocab);
  spec.teacher.steps = 5000;
  spec.teacher.batch_size = 16;
  // The 128-dim teacher needs a cooler rate than the small-student default;
  // 3e-3 plateaus noisily around EX 0.7, 1.5e-3 solves the task.
  spec.teacher.lr = 1.5e-3;
  spec.teacher.seed = 5;
  spec.student = ModelConfig::student_preset(vocab);
  spec.eval = {8, kMaxOutputTokens};
  spec.output_dir = output_dir;

  const std::vector<uint64_t> seeds = {11, 13, 17};
  auto add = [&](Algorithm a, uint64_t seed, const std::string& id,
                 double alpha = kDefaultMaskAlpha, bool mask_only = false) {
    DistillConfig r = DistillConfig::defaults_for(a);
    r.id = id;
    r.alpha = alpha;
    r.kid_masking_only = mask_only;
    r.steps = 3000;
    r.batch_size = 16;
    r.lr = 3e-3;
    r.eval_interval = 500;
    r.seeds = derive_run_seeds(seed);
    spec.runs.push_back(std::move(r));
  };

  for (uint64_t s : seeds) {
    std::string suffix = "-s" + std::to_string(s);
    add(Algorithm::SFT, s, "sft" + suffix);
    add(Algorithm::FKD, s, "fkd" + suffix);
    add(Algorithm::RKD, s, "rkd" + suffix);
    add(Algorithm::FDistill, s, "fdistill" + suffix);
    add(Algorithm::ImitKD, s, "imitkd" + suffix);
    add(Algorithm::GKD, s, "gkd" + suffix);
    for (double alpha : {0.1, 0.2, 0.3, 0.4, 0.5}) {
      std::string alpha_tag = "kid-a" + std::to_string(int(alpha * 10 + 0.5));
      add(Algorithm::KID, s, alpha_tag + suffix, alpha);
    }
    add(Algorithm::KID, s, "kidmask" + suffix, kDefaultMaskAlpha, true);
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Paths
// ---------------------------------------------------------------------------

std::string world_path(const ExperimentSpec& spec) {
  return spec.output_dir + "/worlds/world.json";
}

std::string teacher_checkpoint_path(const ExperimentSpec& spec) {
  return spec.output_dir + "/checkpoints/teacher.ckpt";
}

std::string run_dir(const ExperimentSpec& spec, const std::string& run_id) {
  return spec.output_dir + "/runs/" + run_id;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

std::string cmd_gen_world(const ExperimentSpec& spec,
                          const HarnessOptions& options) {
  std::string path = world_path(spec);
  refuse_overwrite(path, options.force);
  fs::create_directories(spec.output_dir + "/worlds");

  uint64_t seed = options.seed_override.value_or(spec.world.seed);
  ToyWorld world = generate_world(seed, spec.world.n_train, spec.world.n_eval);
  save_world(world, path);
  std::string vocab_path = spec.output_dir + "/worlds/vocab.json";
  Vocabulary::standard().save(vocab_path);
  *options.log << "wrote " << path << "\n";
  *options.log << "wrote " << vocab_path << "\n";
  return path;
}

TeacherOutcome cmd_train_teacher(const ExperimentSpec& spec,
                                 const HarnessOptions& options) {
  auto [world, vocab] = load_world_for(spec);
  std::string ckpt_path = teacher_checkpoint_path(spec);
  refuse_overwrite(ckpt_path, options.force);
  fs::create_directories(spec.output_dir + "/checkpoints");

  ModelConfig config = spec.teacher.config;
  config.vocab_size = vocab->size();

  DistillConfig run = DistillConfig::defaults_for(Algorithm::SFT);
  run.id = "teacher";
  run.steps = spec.teacher.steps;
  run.batch_size = spec.teacher.batch_size;
  run.lr = spec.teacher.lr;
  run.eval_interval = std::max(1, spec.teacher.steps / 5);
  run.seeds =
      derive_run_seeds(options.seed_override.value_or(spec.teacher.seed));

  TrainOptions train_options;
  train_options.threads = options.threads;
  TrainResult result = train_sft(world, *vocab, config, run, train_options);

  save_checkpoint(result.params, ckpt_path);
  EvalOptions eval_opts{spec.eval.ts_k, spec.eval.exaccerr_horizon,
                        options.threads};
  MetricsReport report = evaluate(result.params, world, *vocab, eval_opts);
  std::string report_path = spec.output_dir + "/checkpoints/teacher_report.json";
  write_text(report_path, metrics_report_to_json_text(report));

  *options.log << "wrote " << ckpt_path << "\n";
  *options.log << "wrote " << report_path << "\n";
  *options.log << "teacher EX " << report.ex << " TS " << report.ts << "\n";

  if (report.ex < kTeacherQualityGate)
    throw QualityGateFailedError(report.ex, kTeacherQualityGate);
  return {ckpt_path, report_path, report, result.ledger.wall_seconds};
}

RunOutcome cmd_distill(const ExperimentSpec& spec, const std::string& run_id,
                       const HarnessOptions& options) {
  auto [world, vocab] = load_world_for(spec);

  const DistillConfig* found = nullptr;
  for (const DistillConfig& r : spec.runs)
    if (r.id == run_id) found = &r;
  if (!found) throw std::runtime_error("no run named '" + run_id + "' in spec");
  DistillConfig run = *found;
  if (options.seed_override)
    run.seeds = derive_run_seeds(*options.seed_override);

  std::string dir = run_dir(spec, run_id);
  std::string ckpt_path = dir + "/student.ckpt";
  refuse_overwrite(ckpt_path, options.force);
  fs::create_directories(dir);

  ParamStore<float> teacher;
  const ParamStore<float>* teacher_ptr = nullptr;
  if (run.algorithm != Algorithm::SFT) {
    std::string teacher_path = teacher_checkpoint_path(spec);
    if (!fs::exists(teacher_path))
      throw std::runtime_error("teacher checkpoint missing: " + teacher_path);
    // The quality gate also guards every distillation run.
    json teacher_report = json::parse(
        read_text(spec.output_dir + "/checkpoints/teacher_report.json"));
    double teacher_ex = teacher_report.at("ex").get<double>();
    if (teacher_ex < kTeacherQualityGate)
      throw QualityGateFailedError(teacher_ex, kTeacherQualityGate);
    teacher = load_checkpoint(teacher_path);
    teacher_ptr = &teacher;
  }

  ModelConfig student_config = spec.student;
  student_config.vocab_size = vocab->size();

  TrainOptions train_options;
  train_options.threads = options.threads;
  EvalOptions ex_opts;
  ex_opts.threads = options.threads;
  ex_opts.ex_only = true;
  train_options.eval_hook = [&](int, const ParamStore<float>& params) {
    return evaluate(params, world, *vocab, ex_opts).ex;
  };

  TrainResult result = run_distill(world, *vocab, teacher_ptr, student_config,
                                   run, train_options);

  save_checkpoint(result.params, ckpt_path);

  // Qualitative inspection dump for the imperfect-data pipeline: a few
  // samples rewritten by the final student.
  if (run.algorithm == Algorithm::KID && !run.kid_masking_only) {
    std::ofstream dump(dir + "/imperfect_samples.jsonl");
    int n_dump = std::min<int>(20, int(world.train.size()));
    for (int i = 0; i < n_dump; ++i) {
      const Example& ex = world.train[size_t(i)];
      TrainItem item =
          tokenize_example(ex, world.schemas[size_t(ex.schema_index)], *vocab);
      ImperfectSample sample =
          make_imperfect(run.mask_strategy, run.alpha, result.params,
                         item.prompt, item.gold, hash_seed(run.seeds.sampling,
                                                           0xd0, uint64_t(i)));
      dump << imperfect_debug_line(sample, *vocab, run.mask_strategy, run.alpha)
           << "\n";
    }
    *options.log << "wrote " << dir << "/imperfect_samples.jsonl\n";
  }
  EvalOptions eval_opts{spec.eval.ts_k, spec.eval.exaccerr_horizon,
                        options.threads};
  MetricsReport report = evaluate(result.params, world, *vocab, eval_opts);
  std::string report_path = dir + "/report.json";
  write_text(report_path, metrics_report_to_json_text(report));

  json eval_points = json::array();
  for (const EvalPoint& p : result.eval_points)
    eval_points.push_back({{"step", p.step}, {"ex", p.ex}});
  json manifest{{"config", run_config_to_json(run)},
                {"checkpoint", ckpt_path},
                {"checkpoint_hash", file_hash_hex(ckpt_path)},
                {"final", !result.aborted},
                {"ledger",
                 {{"wall_seconds", result.ledger.wall_seconds},
                  {"forward_passes", result.ledger.forward_passes},
                  {"generated_tokens", result.ledger.generated_tokens}}},
                {"eval_points", eval_points},
                {"metrics",
                 {{"ex", report.ex},
                  {"ts", report.ts},
                  {"exaccerr", report.exaccerr ? json(*report.exaccerr)
                                               : json(nullptr)}}}};
  std::string manifest_path = dir + "/manifest.json";
  write_text(manifest_path, manifest.dump(2) + "\n");

  *options.log << "wrote " << ckpt_path << "\n";
  *options.log << "wrote " << manifest_path << "\n";
  *options.log << "wrote " << report_path << "\n";
  *options.log << run_id << " EX " << report.ex << " TS " << report.ts << "\n";

  return {ckpt_path,     manifest_path, report_path,
          report,        result.ledger, result.eval_points,
          result.aborted};
}

MetricsReport cmd_evaluate(const ExperimentSpec& spec,
                           const std::string& target,
                           const HarnessOptions& options) {
  auto [world, vocab] = load_world_for(spec);
  std::string ckpt = target == "teacher"
                         ? teacher_checkpoint_path(spec)
                         : run_dir(spec, target) + "/student.ckpt";
  if (!fs::exists(ckpt))
    throw std::runtime_error("checkpoint missing: " + ckpt);
  ParamStore<float> params = load_checkpoint(ckpt);
  EvalOptions eval_opts{spec.eval.ts_k, spec.eval.exaccerr_horizon,
                        options.threads};
  MetricsReport report = evaluate(params, world, *vocab, eval_opts);
  fs::create_directories(spec.output_dir + "/reports");
  std::string path = spec.output_dir + "/reports/eval_" + target + ".json";
  write_text(path, metrics_report_to_json_text(report));
  *options.log << "wrote " << path << "\n";
  *options.log << target << " EX " << report.ex << " TS " << report.ts << "\n";
  return report;
}

// ---------------------------------------------------------------------------
// Reporting
// ---------------------------------------------------------------------------

namespace {

struct RunRow {
  std::string id;
  std::string algorithm;
  std::string divergence;
  double alpha = 0.0;
  bool masking_only = false;
  int steps = 0;
  int batch_size = 0;
  double ex = 0.0, ts = 0.0;
  std::optional<double> exaccerr;
  double wall_seconds = 0.0;
  int64_t forward_passes = 0;
  double rel_latency = 0.0;
  double rel_forward = 0.0;
  std::vector<EvalPoint> eval_points;
};

std::string group_label(const RunRow& row) {
  if (row.algorithm == "kid") {
    std::string label = row.masking_only ? "kid-maskonly" : "kid";
    return label + "(a=" + fmt_double(row.alpha) + ")";
  }
  return row.algorithm;
}

}  // namespace

ReportOutcome cmd_report(const std::string& output_dir,
                         const HarnessOptions& options) {
  std::vector<RunRow> rows;
  std::string runs_root = output_dir + "/runs";
  if (fs::exists(runs_root)) {
    std::vector<std::string> dirs;
    for (const auto& entry : fs::directory_iterator(runs_root))
      if (entry.is_directory()) dirs.push_back(entry.path().string());
    std::sort(dirs.begin(), dirs.end());
    for (const std::string& dir : dirs) {
      std::string manifest_path = dir + "/manifest.json";
      if (!fs::exists(manifest_path)) continue;
      json m = json::parse(read_text(manifest_path));
      RunRow row;
      row.id = m.at("config").at("id").get<std::string>();
      row.algorithm = m.at("config").at("algorithm").get<std::string>();
      row.divergence = m.at("config").at("divergence").get<std::string>();
      row.alpha = m.at("config").at("alpha").get<double>();
      row.masking_only = m.at("config").at("kid_masking_only").get<bool>();
      row.steps = m.at("config").at("steps").get<int>();
      row.batch_size = m.at("config").at("batch_size").get<int>();
      row.ex = m.at("metrics").at("ex").get<double>();
      row.ts = m.at("metrics").at("ts").get<double>();
      if (!m.at("metrics").at("exaccerr").is_null())
        row.exaccerr = m.at("metrics").at("exaccerr").get<double>();
      row.wall_seconds = m.at("ledger").at("wall_seconds").get<double>();
      row.forward_passes = m.at("ledger").at("forward_passes").get<int64_t>();
      for (const json& p : m.at("eval_points"))
        row.eval_points.push_back(
            {p.at("step").get<int>(), p.at("ex").get<double>()});
      rows.push_back(std::move(row));
    }
  }
  if (rows.empty())
    throw std::runtime_error("no run manifests under " + runs_root);

  // Normalize against the SFT baseline with matching steps and batch size.
  for (RunRow& row : rows) {
    double sft_wall = 0.0, sft_fwd = 0.0;
    int n_sft = 0;
    for (const RunRow& other : rows) {
      if (other.algorithm == "sft" && other.steps == row.steps &&
          other.batch_size == row.batch_size) {
        sft_wall += other.wall_seconds;
        sft_fwd += double(other.forward_passes);
        ++n_sft;
      }
    }
    if (n_sft == 0)
      throw MissingSftBaselineError(
          "no SFT baseline run with steps=" + std::to_string(row.steps) +
          " batch=" + std::to_string(row.batch_size));
    row.rel_latency = row.wall_seconds / (sft_wall / n_sft);
    row.rel_forward = double(row.forward_passes) / (sft_fwd / n_sft);
  }

  fs::create_directories(output_dir + "/reports");

  std::ostringstream csv;
  csv << "run_id,algorithm,divergence,alpha,ex,ts,exaccerr,rel_latency,"
         "rel_forward_passes,forward_passes,wall_seconds\n";
  for (const RunRow& row : rows) {
    csv << row.id << ',' << row.algorithm << ',' << row.divergence << ','
        << fmt_double(row.alpha) << ',' << fmt_double(row.ex) << ','
        << fmt_double(row.ts) << ','
        << (row.exaccerr ? fmt_double(*row.exaccerr) : "na") << ','
        << fmt_double(row.rel_latency) << ',' << fmt_double(row.rel_forward)
        << ',' << row.forward_passes << ',' << fmt_double(row.wall_seconds)
        << '\n';
  }
  std::string csv_path = output_dir + "/reports/aggregate.csv";
  write_text(csv_path, csv.str());

  std::ostringstream curves;
  curves << "run_id,step,ex\n";
  for (const RunRow& row : rows)
    for (const EvalPoint& p : row.eval_points)
      curves << row.id << ',' << p.step << ',' << fmt_double(p.ex) << '\n';
  std::string curves_path = output_dir + "/reports/curves.csv";
  write_text(curves_path, curves.str());

  // Group rows by algorithm variant and average over seeds.
  std::map<std::string, std::vector<const RunRow*>> groups;
  for (const RunRow& row : rows) groups[group_label(row)].push_back(&row);

  std::ostringstream table;
  table << "method            n     EX      TS      ExAccErr  latency  fwd-passes\n";
  table << "----------------  ----  ------  ------  --------  -------  ----------\n";
  for (const auto& [label, members] : groups) {
    double ex = 0, ts = 0, lat = 0, fwd = 0;
    double eacc = 0;
    int n_eacc = 0;
    for (const RunRow* r : members) {
      ex += r->ex;
      ts += r->ts;
      lat += r->rel_latency;
      fwd += r->rel_forward;
      if (r->exaccerr) {
        eacc += *r->exaccerr;
        ++n_eacc;
      }
    }
    int n = int(members.size());
    char line[160];
    std::snprintf(line, sizeof(line),
                  "%-16s  %-4d  %6.3f  %6.3f  %8s  %6.2fx  %9.2fx\n",
                  label.c_str(), n, ex / n, ts / n,
                  n_eacc ? (std::to_string(eacc / n_eacc).substr(0, 8)).c_str()
                         : "na",
                  lat / n, fwd / n);
    table << line;
  }
  std::string table_path = output_dir + "/reports/table.txt";
  write_text(table_path, table.str());

  *options.log << "wrote " << csv_path << "\n";
  *options.log << "wrote " << curves_path << "\n";
  *options.log << "wrote " << table_path << "\n";
  *options.log << table.str();

  return {csv_path, table_path, curves_path, table.str()};
}

// ---------------------------------------------------------------------------
// Utilities
// ---------------------------------------------------------------------------

uint64_t fnv1a_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  uint64_t hash = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (f.read(buf, sizeof(buf)) || f.gcount() > 0) {
    for (std::streamsize i = 0; i < f.gcount(); ++i) {
      hash ^= uint64_t(uint8_t(buf[i]));
      hash *= 0x100000001b3ULL;
    }
    if (!f) break;
  }
  return hash;
}

std::string file_hash_hex(const std::string& path) {
  uint64_t h = fnv1a_file(path);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", (unsigned long long)h);
  return std::string(buf);
}

std::string metrics_report_to_json_text(const MetricsReport& report) {
  return metrics_report_to_json(report).dump(2) + "\n";
}

}  // namespace kidlab
