// Command-line front end.
#include <csignal>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "mdr/decoy.hpp"
#include "mdr/error.hpp"
#include "mdr/featurize.hpp"
#include "mdr/gbdt.hpp"
#include "mdr/notes.hpp"
#include "mdr/pipeline.hpp"
#include "mdr/simulator.hpp"
#include "mdr/training.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace mdr;

namespace {

volatile std::sig_atomic_t g_stop = 0;

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + p.string());
}

std::vector<TokenizedNote> read_text_dir(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<TokenizedNote> notes;
  for (const auto& f : files) notes.push_back(tokenize(read_file(f)));
  return notes;
}

std::vector<FileEvent> load_events(const fs::path& log) {
  auto parsed = parse_event_log_file(log.string());
  for (const auto& issue : parsed.issues) {
    std::cerr << log.string() << ":" << issue.line << ": " << issue.detail << "\n";
  }
  return std::move(parsed.events);
}

ProcessWindow pid_window(const std::vector<FileEvent>& events, Pid pid, std::optional<Micros> start,
                         std::optional<Micros> dt) {
  Micros first = 0, last = 0;
  bool seen = false;
  for (const auto& e : events) {
    if (e.pid != pid) continue;
    if (!seen) first = e.time;
    last = e.time;
    seen = true;
  }
  Micros s = start.value_or(first);
  Micros width = dt.value_or(last - s + 1);
  return window_events(events, pid, s, std::max<Micros>(width, 1));
}

json features_json(const ProcessWindow& w, std::size_t dims, std::uint64_t seed) {
  auto fv = extract_features(w);
  auto values = fv.exported();
  json named = json::object();
  for (std::size_t i = 0; i < kExpertDims; ++i) named[std::string(kFeatureNames[i])] = values[i];
  auto mode = classify_mode(w);
  return {{"pid", w.pid},
          {"window_start", w.window_start},
          {"window_end", w.window_end},
          {"events", w.events.size()},
          {"features", named},
          {"ntype_before", fv.ntype_before},
          {"ntype_after", fv.ntype_after},
          {"ntype_change", fv.ntype_change},
          {"mode", mode_name(mode.mode)},
          {"embedding_dim", dims},
          {"hash_seed", seed},
          {"embedding", encode(build_graph(w), dims, seed).values}};
}

std::vector<double> row_from_json(const json& j) {
  std::vector<double> row;
  for (auto name : kFeatureNames) row.push_back(j.at("features").at(std::string(name)).get<double>());
  for (const auto& v : j.at("embedding")) row.push_back(v.get<double>());
  return row;
}

void write_alerts(const std::vector<Alert>& alerts, const std::string& path) {
  std::ostringstream out;
  for (const auto& a : alerts) out << serialize_alert(a) << '\n';
  if (path.empty() || path == "-") {
    std::cout << out.str();
  } else {
    write_file(path, out.str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ransomware monitoring, detection and simulated response"};
  app.require_subcommand(1);

  // simulate -----------------------------------------------------------------
  auto* sim = app.add_subcommand("simulate", "Generate a labeled synthetic trace");
  std::string sim_kind = "m1", sim_spec, sim_out;
  std::size_t sim_files = 0;
  double sim_fps = 120, sim_rate = 40, sim_duration = 10;
  std::uint64_t sim_seed = 1;
  bool sim_avoid = false, sim_touch = false;
  int sim_note_k = 1;
  sim->add_option("--kind", sim_kind, "m1..m6 or a benign profile (indexer, office, installer, backup, cleanup, "
                                      "organizer, downloader, zip)");
  sim->add_option("--spec", sim_spec, "JSON scenario file (overrides --kind)");
  sim->add_option("--files", sim_files, "Ransomware: number of files to encrypt (sizes the tree)");
  sim->add_option("--fps", sim_fps, "Ransomware: files per second");
  sim->add_option("--note-every", sim_note_k, "Ransomware: drop a note every k directories (0 = never)");
  sim->add_flag("--avoid-decoys", sim_avoid, "Ransomware: skip decoy files");
  sim->add_option("--rate", sim_rate, "Benign: operations per second");
  sim->add_option("--duration", sim_duration, "Benign: seconds of activity");
  sim->add_flag("--touch-decoys", sim_touch, "Benign: modify one decoy");
  sim->add_option("--seed", sim_seed);
  sim->add_option("--out", sim_out)->required();

  // corpus / notes-corpus ------------------------------------------------------
  auto* corpus = app.add_subcommand("corpus", "Build a labeled window corpus for training");
  std::size_t c_ransom = 200, c_benign = 260;
  std::uint64_t c_seed = 1;
  bool c_zip = false;
  std::string c_out;
  corpus->add_option("--ransom", c_ransom);
  corpus->add_option("--benign", c_benign);
  corpus->add_option("--seed", c_seed);
  corpus->add_flag("--include-zip", c_zip, "Include the compress-and-delete benign profile");
  corpus->add_option("--out", c_out)->required();

  auto* nc = app.add_subcommand("notes-corpus", "Generate synthetic ransom notes and benign documents");
  std::size_t nc_notes = 150, nc_benign = 100;
  std::uint64_t nc_seed = 1;
  std::string nc_out;
  nc->add_option("--notes", nc_notes);
  nc->add_option("--benign", nc_benign);
  nc->add_option("--seed", nc_seed);
  nc->add_option("--out", nc_out)->required();

  // genepool / note -------------------------------------------------------------
  auto* gp = app.add_subcommand("genepool", "Gene pool tools");
  gp->require_subcommand(1);
  auto* gp_build = gp->add_subcommand("build", "Build a gene pool from a directory of notes");
  std::string gp_notes, gp_out;
  std::size_t gp_n = kDefaultNgram, gp_k = kDefaultTopK;
  gp_build->add_option("--notes", gp_notes)->required();
  gp_build->add_option("--n", gp_n);
  gp_build->add_option("--top-k", gp_k);
  gp_build->add_option("--out", gp_out)->required();

  auto* note = app.add_subcommand("note", "Ransom note tools");
  note->require_subcommand(1);
  auto* note_score = note->add_subcommand("score", "Score a file against a gene pool");
  std::string ns_pool, ns_file;
  double ns_tau = kDefaultTauSim;
  note_score->add_option("--pool", ns_pool)->required();
  note_score->add_option("--file", ns_file)->required();
  note_score->add_option("--tau", ns_tau);

  // features ---------------------------------------------------------------------
  auto* feat = app.add_subcommand("features", "Behavior features");
  feat->require_subcommand(1);
  auto* fx = feat->add_subcommand("extract", "Features of one process window");
  std::string fx_log, fx_out, fx_model;
  Pid fx_pid = 0;
  std::optional<Micros> fx_start, fx_dt;
  std::size_t fx_dim = kDefaultEmbeddingDim;
  fx->add_option("--log", fx_log)->required();
  fx->add_option("--pid", fx_pid)->required();
  fx->add_option("--start", fx_start, "Window start (us); default first event of the pid");
  fx->add_option("--dt", fx_dt, "Window length (us); default through the last event");
  fx->add_option("--dim", fx_dim, "Embedding width");
  fx->add_option("--model", fx_model, "Take embedding width and hash seed from a model");
  fx->add_option("--out", fx_out);
  auto* fr = feat->add_subcommand("report", "Class-conditional feature histograms of a corpus (CSV)");
  std::string fr_corpus, fr_out;
  std::size_t fr_bins = 10;
  fr->add_option("--corpus", fr_corpus)->required();
  fr->add_option("--bins", fr_bins);
  fr->add_option("--out", fr_out);

  // train / predict -----------------------------------------------------------
  auto* train = app.add_subcommand("train", "Train the classifier on a window corpus");
  std::string tr_corpus, tr_out;
  BoostParams bp;
  std::size_t tr_dim = kDefaultEmbeddingDim;
  train->add_option("--corpus", tr_corpus)->required();
  train->add_option("--out", tr_out)->required();
  train->add_option("--trees", bp.n_trees);
  train->add_option("--eta", bp.eta);
  train->add_option("--depth", bp.tree.max_depth);
  train->add_option("--gamma", bp.tree.gamma);
  train->add_option("--lambda", bp.tree.lambda);
  train->add_option("--min-leaf", bp.tree.min_leaf);
  train->add_option("--dim", tr_dim, "Embedding width (power of two >= 8)");

  auto* pred = app.add_subcommand("predict", "Score a feature vector or a process window");
  std::string pr_model, pr_features, pr_log;
  Pid pr_pid = 0;
  pred->add_option("--model", pr_model)->required();
  auto* pr_feat_opt = pred->add_option("--features", pr_features, "JSON written by `features extract`");
  auto* pr_log_opt = pred->add_option("--log", pr_log, "Event log (with --pid)");
  pred->add_option("--pid", pr_pid);
  pr_feat_opt->excludes(pr_log_opt);

  // run / watch ------------------------------------------------------------------
  auto* run = app.add_subcommand("run", "Replay an event log through the engine");
  std::string run_log, run_pool, run_model, run_decoys, run_out, run_metrics, run_notes;
  PipelineConfig cfg;
  run->add_option("--log", run_log)->required();
  run->add_option("--pool", run_pool);
  run->add_option("--model", run_model)->required();
  run->add_option("--decoys", run_decoys);
  run->add_option("--notes", run_notes, "JSON map of path -> text for dropped files");
  run->add_option("--tau", cfg.tau_sim);
  run->add_option("--out", run_out);
  run->add_option("--metrics", run_metrics);

  auto* watch = app.add_subcommand("watch", "Watch directories live");
  std::vector<std::string> w_dirs;
  std::string w_pool, w_model, w_decoys, w_out;
  double w_duration = 0;
  watch->add_option("--dirs", w_dirs)->required();
  watch->add_option("--pool", w_pool);
  watch->add_option("--model", w_model)->required();
  watch->add_option("--decoys", w_decoys);
  watch->add_option("--duration", w_duration, "Seconds to run; 0 = until interrupted");
  watch->add_option("--out", w_out);

  // decoy ------------------------------------------------------------------------
  auto* decoy = app.add_subcommand("decoy", "Decoy deployment and registry");
  decoy->require_subcommand(1);
  std::string registry_path = "decoys.json";
  decoy->add_option("--registry", registry_path, "Registry file")->capture_default_str();
  auto* dd = decoy->add_subcommand("deploy", "Write decoys into a directory");
  std::string dd_dir, dd_kind = "document";
  int dd_count = 3;
  bool dd_auto = false;
  std::uint64_t dd_seed = 0x5eed;
  dd->add_option("--dir", dd_dir)->required();
  dd->add_option("--count", dd_count);
  dd->add_option("--kind", dd_kind, "document, image or spreadsheet");
  dd->add_flag("--auto", dd_auto, "Also deploy into early-traversal directories");
  dd->add_option("--seed", dd_seed);
  auto* dl = decoy->add_subcommand("list", "List registered decoys");
  auto* dv = decoy->add_subcommand("verify", "Check decoy digests on disk");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      ScenarioSpec spec;
      if (!sim_spec.empty()) {
        spec = parse_scenario(read_file(sim_spec));
      } else {
        spec = scenario_for_kind(sim_kind);
        spec.seed = sim_seed;
        if (auto* rs = std::get_if<RansomwareSpec>(&spec.kind)) {
          rs->files_per_second = sim_fps;
          rs->note_every_k_dirs = sim_note_k;
          rs->avoid_decoys = sim_avoid;
          if (sim_files) {
            rs->max_files = sim_files;
            spec.tree.files_per_dir = std::max(1, static_cast<int>(std::ceil(static_cast<double>(sim_files) / 78.0)));
          }
        } else {
          auto& bs = std::get<BenignSpec>(spec.kind);
          bs.ops_per_second = sim_rate;
          bs.duration_s = sim_duration;
          bs.touch_decoys = sim_touch;
        }
      }
      auto trace = generate(spec);
      write_trace_dir(trace, sim_out);
      std::cout << trace.events.size() << " events, " << trace.truth.kind << ", written to " << sim_out << "\n";
    } else if (*corpus) {
      CorpusOptions opts;
      opts.include_zip = c_zip;
      auto windows = build_corpus(c_ransom, c_benign, c_seed, opts);
      write_corpus(windows, c_out);
      std::cout << windows.size() << " windows written to " << c_out << "\n";
    } else if (*nc) {
      write_note_corpus(build_note_corpus(nc_notes, nc_benign, nc_seed), nc_out);
      std::cout << nc_notes << " notes and " << nc_benign << " benign documents written to " << nc_out << "\n";
    } else if (*gp_build) {
      auto pool = build_pool(read_text_dir(gp_notes), gp_n, gp_k);
      pool.save(gp_out);
      std::cout << pool.size() << " fragments from " << pool.source_count() << " notes\n";
    } else if (*note_score) {
      auto pool = GenePool::load(ns_pool);
      auto v = similarity(tokenize(read_file(ns_file)), pool, ns_tau);
      json matched = json::array();
      for (const auto& [frag, f] : v.matched) matched.push_back({{"fragment", frag}, {"f", f}});
      std::cout << json{{"score", v.score}, {"threshold", v.threshold}, {"is_note", v.is_note}, {"matched", matched}}
                       .dump(1)
                << "\n";
      return v.is_note ? 0 : 3;
    } else if (*fx) {
      std::size_t dims = fx_dim;
      std::uint64_t seed = kDefaultHashSeed;
      if (!fx_model.empty()) {
        auto m = BoostedForest::load(fx_model);
        dims = m.embedding_dim;
        seed = m.hash_seed;
      }
      auto events = load_events(fx_log);
      auto out = features_json(pid_window(events, fx_pid, fx_start, fx_dt), dims, seed).dump(1) + "\n";
      if (fx_out.empty()) {
        std::cout << out;
      } else {
        write_file(fx_out, out);
      }
    } else if (*fr) {
      std::vector<LabeledFeatures> labeled;
      for (const auto& w : read_corpus(fr_corpus)) labeled.push_back({extract_features(w.window).exported(), w.ransomware});
      std::ostringstream csv;
      write_report_csv(csv, feature_report(labeled, fr_bins));
      if (fr_out.empty()) {
        std::cout << csv.str();
      } else {
        write_file(fr_out, csv.str());
      }
    } else if (*train) {
      auto windows = read_corpus(tr_corpus);
      auto t0 = std::chrono::steady_clock::now();
      FitReport report;
      auto model = train_classifier(windows, bp, tr_dim, kDefaultHashSeed, &report);
      model.save(tr_out);
      double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::cout << "trained " << model.trees.size() << " trees on " << windows.size() << " windows in " << secs
                << " s; train log-loss " << report.train_loss.back() << "; " << fs::file_size(tr_out) << " bytes\n";
    } else if (*pred) {
      auto model = BoostedForest::load(pr_model);
      std::vector<double> row;
      if (!pr_features.empty()) {
        row = row_from_json(json::parse(read_file(pr_features)));
      } else if (!pr_log.empty()) {
        auto events = load_events(pr_log);
        row = featurize(pid_window(events, pr_pid, std::nullopt, std::nullopt), model.embedding_dim, model.hash_seed);
      } else {
        throw Error(ErrorCode::BadSpec, "predict needs --features or --log");
      }
      double p = model.predict(row);
      std::cout << json{{"probability", p}, {"ransomware", p >= 0.5}}.dump() << "\n";
    } else if (*run) {
      auto events = load_events(run_log);
      auto model = BoostedForest::load(run_model);
      DecoyRegistry registry = run_decoys.empty() ? DecoyRegistry{} : DecoyRegistry::load(run_decoys);
      std::optional<GenePool> pool;
      if (!run_pool.empty()) pool = GenePool::load(run_pool);
      ContentProvider contents = run_notes.empty() ? ContentProvider{} : note_contents_from_json(run_notes);
      auto result = run_replay(events, registry, pool ? &*pool : nullptr, model, cfg, contents);
      write_alerts(result.alerts, run_out);
      auto metrics = metrics_to_json(result.metrics) + "\n";
      if (run_metrics.empty()) {
        std::cerr << metrics;
      } else {
        write_file(run_metrics, metrics);
      }
    } else if (*watch) {
      auto model = BoostedForest::load(w_model);
      DecoyRegistry registry = w_decoys.empty() ? DecoyRegistry{} : DecoyRegistry::load(w_decoys);
      std::optional<GenePool> pool;
      if (!w_pool.empty()) pool = GenePool::load(w_pool);
      std::vector<fs::path> dirs(w_dirs.begin(), w_dirs.end());
      LiveSession session(registry, dirs, pool ? &*pool : nullptr, model);
      std::ofstream alert_file;
      if (!w_out.empty()) alert_file.open(w_out, std::ios::app);
      session.on_alert = [&](const Alert& a) {
        auto line = serialize_alert(a);
        std::cout << line << std::endl;
        if (alert_file) alert_file << line << std::endl;
      };
      std::signal(SIGINT, [](int) { g_stop = 1; });
      std::signal(SIGTERM, [](int) { g_stop = 1; });
      session.start();
      auto until = std::chrono::steady_clock::now() + std::chrono::duration<double>(w_duration);
      while (!g_stop && (w_duration <= 0 || std::chrono::steady_clock::now() < until)) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
      }
      session.stop();
      std::cerr << metrics_to_json(session.metrics()) << "\n";
    } else if (*dd) {
      DecoyRegistry registry = fs::exists(registry_path) ? DecoyRegistry::load(registry_path) : DecoyRegistry{};
      DecoySpec spec{dd_dir, dd_count, {parse_decoy_kind(dd_kind)}, NameStyle::MimicNeighbors};
      DeployOptions opts;
      opts.automatic = dd_auto;
      if (dd_auto) opts.early_traversal_dirs = default_early_traversal_dirs();
      opts.seed = dd_seed;
      opts.deployed_at = std::chrono::duration_cast<std::chrono::seconds>(
                             std::chrono::system_clock::now().time_since_epoch())
                             .count();
      for (const auto& p : deploy(spec, registry, opts)) std::cout << p << "\n";
      registry.save(registry_path);
    } else if (*dl) {
      for (const auto& [path, e] : DecoyRegistry::load(registry_path).snapshot()) {
        std::cout << path << "\t" << to_string(e.kind) << "\t" << e.digest << "\n";
      }
    } else if (*dv) {
      int bad = 0;
      for (const auto& c : verify(DecoyRegistry::load(registry_path))) {
        std::cout << to_string(c.status) << "\t" << c.path << "\n";
        bad += c.status != DecoyStatus::Intact;
      }
      return bad ? 2 : 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
