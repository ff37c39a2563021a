#include "varade/cli.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>

#include "varade/baselines.hpp"
#include "varade/checkpoint.hpp"
#include "varade/data.hpp"
#include "varade/detector.hpp"
#include "varade/errors.hpp"
#include "varade/eval.hpp"
#include "varade/synth.hpp"
#include "varade/trainer.hpp"

namespace varade {

namespace {

struct RunConfig {
  std::string model = "varade";
  std::string data = "-";
  std::string output = "-";
  std::string checkpoint;
  std::uint64_t seed = 0;
  bool json = false;

  // synth
  SynthConfig synth;

  // varade
  VaradeConfig varade;
  std::int64_t steps = 2000;
  Index batch = 64;
  double lr = 1e-5;
  std::int64_t log_every = 0;

  // baselines
  Index knn_k = 5;
  Index knn_max_points = 0;
  IsoForestOptions forest;

  // score
  Index max_pending = 1024;

  // bench
  std::int64_t iterations = 100;
  std::int64_t warmup = 10;
  int threads = 1;
  Index bench_inputs = 16;
};

// Splices `--key=value` pairs from a flat key=value file in front of the
// command-line flags, so explicit flags take precedence.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  std::vector<std::string> injected;
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string path;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      out.push_back(args[i]);
      continue;
    }
    std::ifstream in(path);
    if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
    std::string line;
    while (std::getline(in, line)) {
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      const auto key = trim(line.substr(0, eq));
      if (!key.empty()) injected.push_back("--" + key + "=" + trim(line.substr(eq + 1)));
    }
  }
  if (!injected.empty() && !out.empty()) out.insert(out.begin() + 1, injected.begin(), injected.end());
  return out;
}

ChannelSchema generic_schema(Index channels) {
  std::vector<std::string> names;
  for (Index c = 0; c < channels; ++c) names.push_back("ch" + std::to_string(c));
  return ChannelSchema(std::move(names));
}

// Robot schema if the header names exactly its channels, else the header's own order.
ChannelSchema schema_from_header(const std::string& header_line) {
  std::vector<std::string> names;
  std::stringstream ss(header_line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    if (field != "timestamp" && field != "label") names.push_back(field);
  }
  auto sorted = names;
  auto robot = ChannelSchema::robot().names();
  std::sort(sorted.begin(), sorted.end());
  std::sort(robot.begin(), robot.end());
  if (sorted == robot) return ChannelSchema::robot();
  return ChannelSchema(std::move(names));
}

class Input {
 public:
  explicit Input(const std::string& path, std::istream& stdin_stream) {
    if (path == "-") {
      in_ = &stdin_stream;
    } else {
      file_ = std::make_unique<std::ifstream>(path);
      if (!*file_) throw FormatError("cannot open " + path);
      in_ = file_.get();
    }
  }
  std::istream& get() { return *in_; }

 private:
  std::unique_ptr<std::ifstream> file_;
  std::istream* in_ = nullptr;
};

class Output {
 public:
  Output(const std::string& path, std::ostream& stdout_stream) {
    if (path == "-") {
      out_ = &stdout_stream;
    } else {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw FormatError("cannot write " + path);
      out_ = file_.get();
    }
  }
  std::ostream& get() { return *out_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* out_ = nullptr;
};

void cmd_synth(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  SynthConfig sc = cfg.synth;
  sc.seed = cfg.seed;
  const auto result = synth_generate(sc);
  Output sink(cfg.output, out);
  write_csv(sink.get(), result.stream);
  err << "synth: " << result.stream.size() << " samples, " << result.bursts.size()
      << " anomalies, anomaly fraction " << result.anomaly_fraction << "\n";
}

LabeledStream load_training(const RunConfig& cfg, std::istream& in, std::ostream& err,
                            std::unique_ptr<ChannelSchema>& schema) {
  Input input(cfg.data, in);
  std::string header;
  if (!std::getline(input.get(), header)) throw FormatError("train: empty data");
  schema = std::make_unique<ChannelSchema>(schema_from_header(header));
  std::stringstream rest;
  rest << header << '\n' << input.get().rdbuf();
  auto stream = read_csv(rest, *schema);
  if (stream.anomaly_count() > 0)
    err << "warning: training data has " << stream.anomaly_count()
        << " anomaly-labelled samples; labels are ignored\n";
  return stream;
}

RowMatrix<float> subsample_rows(const RowMatrix<float>& rows, Index max_rows, std::uint64_t seed) {
  if (max_rows <= 0 || rows.rows() <= max_rows) return rows;
  std::vector<Index> all(static_cast<std::size_t>(rows.rows()));
  std::iota(all.begin(), all.end(), Index{0});
  std::vector<Index> keep;
  std::mt19937_64 rng(seed);
  std::sample(all.begin(), all.end(), std::back_inserter(keep), max_rows, rng);
  RowMatrix<float> out(max_rows, rows.cols());
  for (Index i = 0; i < max_rows; ++i) out.row(i) = rows.row(keep[static_cast<std::size_t>(i)]);
  return out;
}

void cmd_train(const RunConfig& cfg, std::istream& in, std::ostream& out, std::ostream& err) {
  std::unique_ptr<ChannelSchema> schema;
  const auto stream = load_training(cfg, in, err, schema);
  if (stream.size() < 1) throw FormatError("train: no samples");
  auto normalizer = Normalizer::fit(stream.values);
  const RowMatrix<float> normalized = normalizer.apply(stream.values);

  if (cfg.model == "varade") {
    VaradeConfig vc = cfg.varade;
    vc.channels = stream.channels();
    auto model = build<float>(vc, cfg.seed);
    const Series<float> series = normalized.transpose();
    AdamState<float> state;
    TrainOptions opts;
    opts.steps = cfg.steps;
    opts.batch = cfg.batch;
    opts.lr = cfg.lr;
    opts.seed = cfg.seed + 1;
    if (cfg.log_every > 0)
      opts.on_step = [&](std::int64_t step, const LossBreakdown<double>& l) {
        if (step % cfg.log_every == 0)
          err << "step " << step << " total " << l.total << " recon " << l.recon << " kl " << l.kl << "\n";
      };
    const auto result = cfg.steps > 0 ? train(model, series, opts, state) : TrainResult{};
    save_checkpoint(cfg.checkpoint, VaradeCheckpoint{std::move(model), std::move(normalizer)});
    if (cfg.json) {
      out << nlohmann::json{{"steps", result.steps},
                            {"first_total", result.first.total},
                            {"recon", result.last.recon},
                            {"kl", result.last.kl},
                            {"total", result.last.total}}
                 .dump()
          << "\n";
    } else {
      out << "steps " << result.steps << "\n"
          << "first total " << result.first.total << "\n"
          << "recon " << result.last.recon << "\nkl " << result.last.kl << "\ntotal "
          << result.last.total << "\n";
    }
  } else if (cfg.model == "knn") {
    auto index = KnnIndex::fit(subsample_rows(normalized, cfg.knn_max_points, cfg.seed), cfg.knn_k);
    out << "knn: stored " << index.points().rows() << " points, k=" << index.k() << "\n";
    save_checkpoint(cfg.checkpoint, KnnCheckpoint{std::move(index), std::move(normalizer)});
  } else if (cfg.model == "iforest") {
    auto opts = cfg.forest;
    opts.seed = cfg.seed;
    auto forest = IsoForest::fit(normalized, opts);
    out << "iforest: " << forest.trees().size() << " trees, subsample " << forest.subsample()
        << ", threshold " << forest.threshold() << "\n";
    save_checkpoint(cfg.checkpoint, IForestCheckpoint{std::move(forest), std::move(normalizer)});
  } else {
    throw CLI::ValidationError("--model", "unknown model " + cfg.model);
  }
}

WindowScorer scorer_for(const Checkpoint& ck) {
  return std::visit(
      [](const auto& c) -> WindowScorer {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, VaradeCheckpoint>) {
          return varade_scorer(c.model);
        } else {
          return {1, [&c](const TensorF& w) {
                    const std::span<const float> x(w.data(), static_cast<std::size_t>(w.size()));
                    if constexpr (std::is_same_v<T, KnnCheckpoint>)
                      return c.index.score(x);
                    else
                      return c.forest.score(x);
                  }};
        }
      },
      ck);
}

void cmd_score(const RunConfig& cfg, std::istream& in, std::ostream& out, std::ostream& err) {
  const auto ck = load_checkpoint(cfg.checkpoint);
  const Index expected = channels_of(ck);
  Input input(cfg.data, in);
  std::string first;
  if (!std::getline(input.get(), first)) throw FormatError("score: empty input");

  std::unique_ptr<ChannelSchema> schema;
  Index channels = 0;
  const bool header = first.find_first_not_of("0123456789+-.eE ") < first.find(',');
  if (header) {
    schema = std::make_unique<ChannelSchema>(schema_from_header(first));
    channels = schema->size();
  } else {
    channels = static_cast<Index>(std::count(first.begin(), first.end(), ','));
  }
  if (channels != expected)
    throw FormatError("score: checkpoint expects " + std::to_string(expected) +
                      " channels but data has " + std::to_string(channels));
  if (!schema)
    schema = std::make_unique<ChannelSchema>(channels == ChannelSchema::robot().size()
                                                 ? ChannelSchema::robot()
                                                 : generic_schema(channels));

  RecordParser parser(*schema, normalizer_of(ck));
  StreamDetector detector(scorer_for(ck), channels, cfg.max_pending);
  Output sink(cfg.output, out);
  std::string line = first;
  bool have_line = true;
  detector.run(
      [&]() -> std::optional<SampleRecord> {
        while (have_line || std::getline(input.get(), line)) {
          have_line = false;
          if (auto record = parser.parse(line)) return record;
        }
        return std::nullopt;
      },
      [&](const ScoredPoint& p) { write_scored(sink.get(), p); });
  sink.get().flush();
  detector.stats().malformed += parser.malformed();
  const auto& st = detector.stats();
  err << "score: received " << st.received << ", scored " << st.scored << ", dropped "
      << st.dropped << ", malformed " << st.malformed << "\n";
}

void cmd_eval(const RunConfig& cfg, std::istream& in, std::ostream& out) {
  Input input(cfg.data, in);
  const auto points = read_scored(input.get());
  const auto report = evaluate(points);
  out << (cfg.json ? report.json() + "\n" : report.text());
}

void cmd_bench(const RunConfig& cfg, std::ostream& out) {
  const auto ck = load_checkpoint(cfg.checkpoint);
  const auto scorer = scorer_for(ck);
  const Index channels = channels_of(ck);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<float> unit(-1.0f, 1.0f);
  std::vector<TensorF> inputs;
  for (Index i = 0; i < std::max<Index>(1, cfg.bench_inputs); ++i) {
    TensorF w(Shape{channels, scorer.window});
    for (Index j = 0; j < w.size(); ++j) w[j] = unit(rng);
    inputs.push_back(std::move(w));
  }
  std::vector<double> sinks(static_cast<std::size_t>(std::max(1, cfg.threads)), 0.0);
  const auto report = bench_throughput(
      [&](std::int64_t i) {
        const double s = scorer.score(inputs[static_cast<std::size_t>(i) % inputs.size()]);
        sinks[static_cast<std::size_t>(i % static_cast<std::int64_t>(sinks.size()))] += s;
      },
      BenchOptions{cfg.iterations, cfg.warmup, cfg.threads});
  out << (cfg.json ? report.json() + "\n" : report.text());
}

}  // namespace

int run_cli(const std::vector<std::string>& raw_args, std::istream& in, std::ostream& out,
            std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"VARADE streaming anomaly detection", "varade"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled robot stream (CSV)");
  synth->add_option("--cycles", cfg.synth.cycles, "Action cycles (30 actions each)")->capture_default_str();
  synth->add_option("--rate", cfg.synth.sample_rate, "Sample rate in Hz")->capture_default_str();
  synth->add_option("--action-seconds", cfg.synth.action_seconds)->capture_default_str();
  synth->add_option("--anomalies", cfg.synth.anomalies, "Collision bursts to inject")->capture_default_str();
  synth->add_option("--burst-min", cfg.synth.burst_min_seconds)->capture_default_str();
  synth->add_option("--burst-max", cfg.synth.burst_max_seconds)->capture_default_str();
  synth->add_option("--guard", cfg.synth.guard_seconds, "Anomaly-free seconds around bursts")->capture_default_str();
  synth->add_option("--program-seed", cfg.synth.program_seed)->capture_default_str();
  synth->add_option("--seed", cfg.seed)->capture_default_str();
  synth->add_option("-o,--output", cfg.output)->capture_default_str();

  auto* train_cmd = app.add_subcommand("train", "Fit a detector and write a checkpoint");
  train_cmd->add_option("--data", cfg.data, "Training CSV, '-' for stdin")->capture_default_str();
  train_cmd->add_option("--checkpoint", cfg.checkpoint)->required();
  train_cmd->add_option("--model", cfg.model)->check(CLI::IsMember({"varade", "knn", "iforest"}))->capture_default_str();
  train_cmd->add_option("--seed", cfg.seed)->capture_default_str();
  train_cmd->add_option("--steps", cfg.steps)->check(CLI::NonNegativeNumber)->capture_default_str();
  train_cmd->add_option("--batch", cfg.batch)->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--lr", cfg.lr)->capture_default_str();
  train_cmd->add_option("--window", cfg.varade.window)->capture_default_str();
  train_cmd->add_option("--base-maps", cfg.varade.base_maps)->capture_default_str();
  train_cmd->add_option("--lambda", cfg.varade.lambda)->capture_default_str();
  train_cmd->add_option("--logvar-min", cfg.varade.logvar_min)->capture_default_str();
  train_cmd->add_option("--logvar-max", cfg.varade.logvar_max)->capture_default_str();
  train_cmd->add_option("--log-every", cfg.log_every, "Print loss every N steps")->capture_default_str();
  train_cmd->add_option("--knn-k", cfg.knn_k)->capture_default_str();
  train_cmd->add_option("--knn-max-points", cfg.knn_max_points, "Random subsample cap, 0 keeps all")->capture_default_str();
  train_cmd->add_option("--trees", cfg.forest.trees)->capture_default_str();
  train_cmd->add_option("--subsample", cfg.forest.subsample)->capture_default_str();
  train_cmd->add_option("--contamination", cfg.forest.contamination)->capture_default_str();
  train_cmd->add_flag("--json", cfg.json);

  auto* score_cmd = app.add_subcommand("score", "Stream timestamp,score lines for a data stream");
  score_cmd->add_option("--checkpoint", cfg.checkpoint)->required();
  score_cmd->add_option("--data", cfg.data, "CSV or headerless records, '-' for stdin")->capture_default_str();
  score_cmd->add_option("-o,--output", cfg.output)->capture_default_str();
  score_cmd->add_option("--max-pending", cfg.max_pending)->check(CLI::PositiveNumber)->capture_default_str();

  auto* eval_cmd = app.add_subcommand("eval", "AUC-ROC of labeled timestamp,score,label lines");
  eval_cmd->add_option("--scores", cfg.data, "Scored stream, '-' for stdin")->capture_default_str();
  eval_cmd->add_flag("--json", cfg.json);

  auto* bench_cmd = app.add_subcommand("bench", "Measure inference frequency of a checkpoint");
  bench_cmd->add_option("--checkpoint", cfg.checkpoint)->required();
  bench_cmd->add_option("--iterations", cfg.iterations)->check(CLI::PositiveNumber)->capture_default_str();
  bench_cmd->add_option("--warmup", cfg.warmup)->check(CLI::NonNegativeNumber)->capture_default_str();
  bench_cmd->add_option("--threads", cfg.threads)->check(CLI::PositiveNumber)->capture_default_str();
  bench_cmd->add_option("--inputs", cfg.bench_inputs, "Distinct pre-generated inputs")->capture_default_str();
  bench_cmd->add_option("--seed", cfg.seed)->capture_default_str();
  bench_cmd->add_flag("--json", cfg.json);

  try {
    auto args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*synth) cmd_synth(cfg, out, err);
    if (*train_cmd) cmd_train(cfg, in, out, err);
    if (*score_cmd) cmd_score(cfg, in, out, err);
    if (*eval_cmd) cmd_eval(cfg, in, out);
    if (*bench_cmd) cmd_bench(cfg, out);
  } catch (const CLI::Error& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace varade
