#include "gcnet/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "gcnet/error.hpp"
#include "gcnet/ghost.hpp"
#include "gcnet/mask_io.hpp"
#include "gcnet/random.hpp"

namespace gcnet {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  while (true) {
    const auto pos = s.find(sep);
    parts.push_back(trim(s.substr(0, pos)));
    if (pos == std::string_view::npos) break;
    s.remove_prefix(pos + 1);
  }
  return parts;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  fail(ErrorKind::Config,
       "invalid value '" + std::string(value) + "' for '" + std::string(key) + "'");
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end || value.empty()) bad_value(key, value);
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  bad_value(key, value);
}

PruneMethod parse_method(std::string_view key, std::string_view v) {
  for (auto m : {PruneMethod::L1, PruneMethod::L2, PruneMethod::OsSynFlow, PruneMethod::CSnip})
    if (v == method_name(m)) return m;
  bad_value(key, v);
}

HybridMode parse_hybrid(std::string_view key, std::string_view v) {
  for (auto h : {HybridMode::FullGC, HybridMode::FrontHalf, HybridMode::BackHalf,
                 HybridMode::Back25, HybridMode::DirectOnly})
    if (v == hybrid_name(h)) return h;
  bad_value(key, v);
}

std::string format_double(double v, const char* fmt = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

}  // namespace

void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "arch") {
    if (value == "MiniVGG" || value == "minivgg" || value == "vgg")
      cfg.arch = Architecture::MiniVGG;
    else if (value == "MiniResNet" || value == "miniresnet" || value == "resnet")
      cfg.arch = Architecture::MiniResNet;
    else
      bad_value(key, value);
  } else if (key == "dataset") {
    if (value != "synth" && !value.starts_with("idx:")) bad_value(key, value);
    if (value.starts_with("idx:") && split(value.substr(4), ',').size() != 4)
      fail(ErrorKind::Config, "dataset idx: needs 4 comma-separated paths");
    cfg.dataset = std::string(value);
  } else if (key == "metric") {
    if (value == "pearson")
      cfg.metric = Metric::Pearson;
    else if (value == "cosine")
      cfg.metric = Metric::Cosine;
    else
      bad_value(key, value);
  } else if (key == "method") {
    cfg.method.clear();
    if (value == "all")
      cfg.method = {PruneMethod::L1, PruneMethod::L2, PruneMethod::OsSynFlow, PruneMethod::CSnip};
    else
      for (auto v : split(value, ',')) cfg.method.push_back(parse_method(key, v));
  } else if (key == "hybrid") {
    cfg.hybrid.clear();
    if (value == "all")
      cfg.hybrid = {HybridMode::DirectOnly, HybridMode::FullGC, HybridMode::FrontHalf,
                    HybridMode::BackHalf, HybridMode::Back25};
    else
      for (auto v : split(value, ',')) cfg.hybrid.push_back(parse_hybrid(key, v));
  } else if (key == "alpha") {
    cfg.alpha.clear();
    for (auto v : split(value, ',')) cfg.alpha.push_back(parse_number<double>(key, v));
  } else if (key == "epochs") {
    cfg.epochs = parse_number<std::size_t>(key, value);
  } else if (key == "finetune_lr") {
    cfg.finetune_lr = parse_number<double>(key, value);
  } else if (key == "trials") {
    cfg.trials = parse_number<std::size_t>(key, value);
  } else if (key == "seed") {
    cfg.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "connectivity_sample_cap") {
    cfg.connectivity_sample_cap = parse_number<std::size_t>(key, value);
  } else if (key == "classes") {
    cfg.classes = parse_number<std::size_t>(key, value);
  } else if (key == "image_size") {
    cfg.image_size = parse_number<std::size_t>(key, value);
  } else if (key == "channels") {
    cfg.channels = parse_number<std::size_t>(key, value);
  } else if (key == "train_samples") {
    cfg.train_samples = parse_number<std::size_t>(key, value);
  } else if (key == "test_samples") {
    cfg.test_samples = parse_number<std::size_t>(key, value);
  } else if (key == "baseline_epochs") {
    cfg.baseline_epochs = parse_number<std::size_t>(key, value);
  } else if (key == "baseline_lr") {
    cfg.baseline_lr = parse_number<double>(key, value);
  } else if (key == "batch_size") {
    cfg.batch_size = parse_number<std::size_t>(key, value);
  } else if (key == "snip_samples") {
    cfg.snip_samples = parse_number<std::size_t>(key, value);
  } else if (key == "snip_cap") {
    cfg.snip_cap = parse_number<double>(key, value);
  } else if (key == "ghost_scoring") {
    if (value == "ghost")
      cfg.ghost_scoring = GhostScoring::Ghost;
    else if (value == "original")
      cfg.ghost_scoring = GhostScoring::Original;
    else
      bad_value(key, value);
  } else if (key == "checkpoint_dir") {
    cfg.checkpoint_dir = std::string(value);
  } else if (key == "cjg_brightness") {
    cfg.cjg.brightness = parse_number<double>(key, value);
  } else if (key == "cjg_contrast_lo") {
    cfg.cjg.contrast_lo = parse_number<double>(key, value);
  } else if (key == "cjg_contrast_hi") {
    cfg.cjg.contrast_hi = parse_number<double>(key, value);
  } else if (key == "cjg_rotation_deg") {
    cfg.cjg.rotation_deg = parse_number<double>(key, value);
  } else if (key == "cjg_translate") {
    cfg.cjg.translate = parse_number<double>(key, value);
  } else if (key == "rnb_sigma") {
    cfg.rnb.noise_sigma = parse_number<double>(key, value);
  } else if (key == "rnb_blur") {
    cfg.rnb.blur_kernel = parse_number<std::size_t>(key, value);
  } else if (key == "lo_brightness") {
    cfg.lo.brightness = parse_number<double>(key, value);
  } else if (key == "lo_patch") {
    cfg.lo.patch_fraction = parse_number<double>(key, value);
  } else if (key == "dump_masks") {
    cfg.dump_masks = parse_bool(key, value);
  } else if (key == "dump_connectivity") {
    cfg.dump_connectivity = parse_bool(key, value);
  } else if (key == "out") {
    cfg.out = std::string(value);
  } else {
    fail(ErrorKind::Config, "unknown config key '" + std::string(key) + "'");
  }
}

ExperimentConfig parse_config(std::string_view text, ExperimentConfig cfg) {
  std::size_t line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      fail(ErrorKind::Config, "config line " + std::to_string(line_no) + ": expected key=value");
    try {
      set_config_value(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const Error& e) {
      throw e.with_phase("config line " + std::to_string(line_no));
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Config, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

void validate(const ExperimentConfig& cfg) {
  auto check = [](bool ok, const std::string& msg) {
    if (!ok) fail(ErrorKind::Config, msg);
  };
  check(!cfg.method.empty() && !cfg.hybrid.empty() && !cfg.alpha.empty(),
        "method, hybrid and alpha need at least one value");
  for (double a : cfg.alpha) check(a > 0.0 && a < 1.0, "alpha must be in (0, 1)");
  check(cfg.trials >= 1, "trials must be >= 1");
  check(cfg.finetune_lr >= 0.0 && cfg.baseline_lr > 0.0, "learning rates must be positive");
  check(cfg.batch_size >= 1, "batch_size must be >= 1");
  check(cfg.connectivity_sample_cap >= 2, "connectivity_sample_cap must be >= 2");
  check(cfg.snip_samples >= 1, "snip_samples must be >= 1");
  check(cfg.snip_cap > 0.0 && cfg.snip_cap <= 1.0, "snip_cap must be in (0, 1]");
  check(cfg.classes >= 2, "classes must be >= 2");
  check(cfg.channels >= 1, "channels must be >= 1");
  check(cfg.train_samples >= cfg.classes && cfg.test_samples >= cfg.classes,
        "train/test samples must cover every class");
  if (cfg.arch == Architecture::MiniVGG)
    check(cfg.image_size >= 8 && cfg.image_size % 4 == 0,
          "MiniVGG needs image_size divisible by 4");
  else
    check(cfg.image_size >= 4 && cfg.image_size % 2 == 0, "MiniResNet needs an even image_size");
  ShiftSpec spec;
  spec.cjg = cfg.cjg;
  spec.rnb = cfg.rnb;
  spec.lo = cfg.lo;
  try {
    validate(spec);
  } catch (const Error& e) {
    fail(ErrorKind::Config, e.what());
  }
}

std::string config_text(const ExperimentConfig& cfg) {
  std::ostringstream o;
  auto join = [](const auto& items, auto name) {
    std::string s;
    for (const auto& x : items) s += (s.empty() ? "" : ",") + std::string(name(x));
    return s;
  };
  o << "arch=" << architecture_name(cfg.arch) << "\n"
    << "dataset=" << cfg.dataset << "\n"
    << "metric=" << metric_name(cfg.metric) << "\n"
    << "method=" << join(cfg.method, method_name) << "\n"
    << "hybrid=" << join(cfg.hybrid, hybrid_name) << "\n"
    << "alpha=" << join(cfg.alpha, [](double a) { return format_double(a, "%g"); }) << "\n"
    << "epochs=" << cfg.epochs << "\n"
    << "finetune_lr=" << format_double(cfg.finetune_lr, "%g") << "\n"
    << "trials=" << cfg.trials << "\n"
    << "seed=" << cfg.seed << "\n"
    << "connectivity_sample_cap=" << cfg.connectivity_sample_cap << "\n"
    << "classes=" << cfg.classes << "\n"
    << "image_size=" << cfg.image_size << "\n"
    << "channels=" << cfg.channels << "\n"
    << "train_samples=" << cfg.train_samples << "\n"
    << "test_samples=" << cfg.test_samples << "\n"
    << "baseline_epochs=" << cfg.baseline_epochs << "\n"
    << "baseline_lr=" << format_double(cfg.baseline_lr, "%g") << "\n"
    << "batch_size=" << cfg.batch_size << "\n"
    << "snip_samples=" << cfg.snip_samples << "\n"
    << "snip_cap=" << format_double(cfg.snip_cap, "%g") << "\n"
    << "ghost_scoring=" << (cfg.ghost_scoring == GhostScoring::Ghost ? "ghost" : "original")
    << "\n"
    << "cjg_brightness=" << format_double(cfg.cjg.brightness, "%g") << "\n"
    << "cjg_contrast_lo=" << format_double(cfg.cjg.contrast_lo, "%g") << "\n"
    << "cjg_contrast_hi=" << format_double(cfg.cjg.contrast_hi, "%g") << "\n"
    << "cjg_rotation_deg=" << format_double(cfg.cjg.rotation_deg, "%g") << "\n"
    << "cjg_translate=" << format_double(cfg.cjg.translate, "%g") << "\n"
    << "rnb_sigma=" << format_double(cfg.rnb.noise_sigma, "%g") << "\n"
    << "rnb_blur=" << cfg.rnb.blur_kernel << "\n"
    << "lo_brightness=" << format_double(cfg.lo.brightness, "%g") << "\n"
    << "lo_patch=" << format_double(cfg.lo.patch_fraction, "%g") << "\n";
  return o.str();
}

std::vector<Cell> cells(const ExperimentConfig& cfg) {
  std::vector<Cell> out;
  for (auto h : cfg.hybrid)
    for (auto m : cfg.method)
      for (auto a : cfg.alpha) out.push_back({m, h, a});
  return out;
}

ExperimentData prepare_data(const ExperimentConfig& cfg) {
  ExperimentData d;
  if (cfg.dataset == "synth") {
    SynthOptions opt;
    opt.channels = cfg.channels;
    d.train = synth_dataset(split_seed(cfg.seed, 100), cfg.train_samples, cfg.classes,
                            cfg.image_size, cfg.image_size, opt, Split::Train);
    d.test = synth_dataset(split_seed(cfg.seed, 101), cfg.test_samples, cfg.classes,
                           cfg.image_size, cfg.image_size, opt, Split::Test);
  } else {
    const auto paths = split(std::string_view(cfg.dataset).substr(4), ',');
    d.train = load_idx(std::string(paths[0]), std::string(paths[1]), Split::Train);
    d.test = load_idx(std::string(paths[2]), std::string(paths[3]), Split::Test);
    const std::size_t classes = std::max(d.train.class_count, d.test.class_count);
    d.train.class_count = d.test.class_count = classes;
  }
  ShiftSpec spec;
  spec.cjg = cfg.cjg;
  spec.rnb = cfg.rnb;
  spec.lo = cfg.lo;
  spec.kind = ShiftKind::CJG;
  spec.seed = split_seed(cfg.seed, 200);
  d.cjg = apply_shift(d.test, spec);
  spec.kind = ShiftKind::RNB;
  spec.seed = split_seed(cfg.seed, 201);
  d.rnb = apply_shift(d.test, spec);
  spec.kind = ShiftKind::LO;
  spec.seed = split_seed(cfg.seed, 202);
  d.lo = apply_shift(d.test, spec);
  return d;
}

std::uint64_t trial_seed(const ExperimentConfig& cfg, std::size_t trial) {
  return split_seed(cfg.seed, trial);
}

namespace {

Network blank_network(const ExperimentConfig& cfg, const ExperimentData& data) {
  const auto& s = data.train.images.shape();
  require(s[2] == s[3], ErrorKind::Config, "square images required");
  return make_architecture(cfg.arch, s[1], s[2], data.train.class_count);
}

}  // namespace

Network prepare_baseline(const ExperimentConfig& cfg, const ExperimentData& data,
                         std::size_t trial) {
  Network net = blank_network(cfg, data);
  const std::uint64_t seed = trial_seed(cfg, trial);
  std::filesystem::path ckpt;
  if (!cfg.checkpoint_dir.empty()) {
    ckpt = std::filesystem::path(cfg.checkpoint_dir) /
           ("baseline_" + std::string(architecture_name(cfg.arch)) + "_trial" +
            std::to_string(trial) + ".gcw");
    if (std::filesystem::exists(ckpt)) {
      load_checkpoint(net, ckpt);
      return net;
    }
  }
  init_weights(net, split_seed(seed, 1));
  SgdState state{cfg.baseline_lr, 0};
  train(net, data.train.images, data.train.labels, state,
        TrainOptions{cfg.baseline_epochs, cfg.batch_size, split_seed(seed, 2)});
  if (!ckpt.empty()) {
    std::filesystem::create_directories(ckpt.parent_path());
    save_checkpoint(net, ckpt);
  }
  return net;
}

TrialResult run_cell(const ExperimentConfig& cfg, const ExperimentData& data,
                     const Network& baseline, double baseline_accuracy, const GhostNet* ghost,
                     const Cell& cell, std::size_t trial) {
  TrialResult r;
  r.cell = cell;
  r.trial = trial;
  r.trial_seed = trial_seed(cfg, trial);
  r.acc_O = baseline_accuracy;

  Network net = baseline;
  std::optional<GhostNet> local_ghost;
  if (ghost) local_ghost = *ghost;
  const LayerPartition part = partition_layers(net, cell.hybrid);

  SnipBatch snip;
  const bool needs_batch = cell.method == PruneMethod::CSnip;
  if (needs_batch) {
    const ImageDataset head = data.train.head(cfg.snip_samples);
    snip.images = head.images;
    snip.labels = head.labels;
  }

  MaskSet masks;
  try {
    PruneOptions opt{cell.method, cell.alpha, cfg.snip_cap, cfg.ghost_scoring};
    masks = guided_prune(net, local_ghost ? &*local_ghost : nullptr, cell.hybrid, opt,
                         needs_batch ? &snip : nullptr);
  } catch (const Error& e) {
    throw e.with_phase("prune");
  }
  r.partial = masks.partial;
  for (const auto& [i, m] : masks.masks)
    r.sparsity.push_back({i, m.pruned_count(), m.size(), masks.provenance.at(i)});

  if (cfg.dump_masks && !cfg.out.empty()) {
    const auto dir = std::filesystem::path(cfg.out) / "masks" /
                     ("trial" + std::to_string(trial) + "_" + std::string(hybrid_name(cell.hybrid)) +
                      "_" + std::string(method_name(cell.method)) + "_" +
                      format_double(cell.alpha, "%g"));
    std::filesystem::create_directories(dir);
    for (const auto& [i, m] : masks.masks)
      write_mask(m, dir / ("layer_" + std::to_string(i) + ".gcmk"));
  }

  try {
    SgdState state{cfg.finetune_lr, 0};
    train(net, data.train.images, data.train.labels, state,
          TrainOptions{cfg.epochs, cfg.batch_size, split_seed(r.trial_seed, 3)});
  } catch (const Error& e) {
    throw e.with_phase("fine-tune");
  }

  try {
    r.acc_1 = accuracy(net, data.test.images, data.test.labels);
    r.acc_cjg = accuracy(net, data.cjg.images, data.cjg.labels);
    r.acc_rnb = accuracy(net, data.rnb.images, data.rnb.labels);
    r.acc_lo = accuracy(net, data.lo.images, data.lo.labels);
  } catch (const Error& e) {
    throw e.with_phase("evaluate");
  }

  PipelineRun run;
  run.original = &net;
  run.ghost = local_ghost ? &local_ghost->net : nullptr;
  run.partition = part;
  run.method = cell.method;
  run.metric = cfg.metric;
  run.connectivity_samples = std::min(cfg.connectivity_sample_cap, data.train.size());
  run.snip_samples = std::min(cfg.snip_samples, data.train.size());
  r.flops = count_pipeline_flops(run);
  return r;
}

namespace {

struct TrialContext {
  Network baseline;
  double accuracy = 0.0;
  std::optional<GhostNet> ghost;
};

TrialContext prepare_trial(const ExperimentConfig& cfg, const ExperimentData& data,
                           std::size_t trial, bool need_ghost) {
  TrialContext ctx;
  try {
    ctx.baseline = prepare_baseline(cfg, data, trial);
    ctx.accuracy = accuracy(ctx.baseline, data.test.images, data.test.labels);
  } catch (const Error& e) {
    throw e.with_phase("baseline");
  }
  if (need_ghost) {
    try {
      const ImageDataset sample = data.train.head(cfg.connectivity_sample_cap);
      ctx.ghost = build_ghost(ctx.baseline, sample.images, cfg.metric);
      if (cfg.dump_connectivity && !cfg.out.empty())
        dump_connectivity(ctx.ghost->chain, std::filesystem::path(cfg.out) / "connectivity" /
                                                ("trial" + std::to_string(trial)));
    } catch (const Error& e) {
      throw e.with_phase("ghost");
    }
  }
  return ctx;
}

}  // namespace

TrialResult run_trial(const ExperimentConfig& cfg, std::size_t trial) {
  validate(cfg);
  const auto cs = cells(cfg);
  require(cs.size() == 1, ErrorKind::Config, "run_trial needs a single-cell config");
  const ExperimentData data = [&] {
    try {
      return prepare_data(cfg);
    } catch (const Error& e) {
      throw e.with_phase("data");
    }
  }();
  const bool need_ghost = cs[0].hybrid != HybridMode::DirectOnly;
  const TrialContext ctx = prepare_trial(cfg, data, trial, need_ghost);
  return run_cell(cfg, data, ctx.baseline, ctx.accuracy, ctx.ghost ? &*ctx.ghost : nullptr,
                  cs[0], trial);
}

AggregateRow aggregate(const std::vector<TrialResult>& trials) {
  require(!trials.empty(), ErrorKind::Input, "nothing to aggregate");
  AggregateRow row;
  row.cell = trials.front().cell;
  row.trials = trials.size();
  const double n = static_cast<double>(trials.size());
  FlopsReport sum;
  for (const auto& t : trials) {
    row.acc_O += t.acc_O;
    row.acc_1 += t.acc_1;
    row.acc_cjg += t.acc_cjg;
    row.acc_rnb += t.acc_rnb;
    row.acc_lo += t.acc_lo;
    sum.connectivity_flops += t.flops.connectivity_flops;
    sum.gc_prune_flops += t.flops.gc_prune_flops;
    sum.mapping_flops += t.flops.mapping_flops;
    sum.direct_prune_flops += t.flops.direct_prune_flops;
    sum.inference_flops_per_sample += t.flops.inference_flops_per_sample;
  }
  row.acc_O /= n;
  row.acc_1 /= n;
  row.acc_cjg /= n;
  row.acc_rnb /= n;
  row.acc_lo /= n;
  const std::uint64_t k = trials.size();
  row.flops = {sum.connectivity_flops / k, sum.gc_prune_flops / k, sum.mapping_flops / k,
               sum.direct_prune_flops / k, sum.inference_flops_per_sample / k};
  return row;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* log,
                                const std::vector<std::size_t>& trial_order) {
  validate(cfg);
  std::vector<std::size_t> order = trial_order;
  if (order.empty())
    for (std::size_t t = 0; t < cfg.trials; ++t) order.push_back(t);
  {
    auto sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t t = 0; t < sorted.size(); ++t)
      require(sorted[t] == t && sorted.size() == cfg.trials, ErrorKind::Input,
              "trial order must be a permutation of 0..trials-1");
  }

  const ExperimentData data = [&] {
    try {
      return prepare_data(cfg);
    } catch (const Error& e) {
      throw e.with_phase("data");
    }
  }();
  const auto cs = cells(cfg);
  const bool need_ghost = std::any_of(cs.begin(), cs.end(), [](const Cell& c) {
    return c.hybrid != HybridMode::DirectOnly;
  });

  // per_cell[c][t]
  std::vector<std::vector<TrialResult>> per_cell(cs.size(),
                                                 std::vector<TrialResult>(cfg.trials));
  for (const std::size_t t : order) {
    if (log) *log << "trial " << t << ": preparing baseline" << std::endl;
    const TrialContext ctx = prepare_trial(cfg, data, t, need_ghost);
    if (log) *log << "trial " << t << ": dense accuracy " << format_double(ctx.accuracy) << std::endl;
    for (std::size_t c = 0; c < cs.size(); ++c) {
      const GhostNet* ghost =
          cs[c].hybrid == HybridMode::DirectOnly || !ctx.ghost ? nullptr : &*ctx.ghost;
      per_cell[c][t] = run_cell(cfg, data, ctx.baseline, ctx.accuracy, ghost, cs[c], t);
      if (log)
        *log << "trial " << t << " " << hybrid_name(cs[c].hybrid) << "/"
             << method_name(cs[c].method) << "/" << format_double(cs[c].alpha, "%g")
             << ": acc_1 " << format_double(per_cell[c][t].acc_1) << std::endl;
    }
  }

  ExperimentResult result;
  for (auto& trials : per_cell) {
    result.rows.push_back(aggregate(trials));
    for (auto& t : trials) result.trials.push_back(std::move(t));
  }
  return result;
}

std::string csv_header() {
  return "trial,arch,dataset,method,hybrid,alpha,metric,acc_O,acc_1,acc_cjg,acc_rnb,acc_lo,"
         "flops_connectivity,flops_gc_prune,flops_mapping";
}

namespace {

std::string dataset_column(const ExperimentConfig& cfg) {
  return cfg.dataset == "synth" ? "synth" : "idx";
}

std::string csv_row(const ExperimentConfig& cfg, const std::string& trial, const Cell& cell,
                    double acc_O, double acc_1, double cjg, double rnb, double lo,
                    const FlopsReport& f) {
  std::ostringstream o;
  o << trial << ',' << architecture_name(cfg.arch) << ',' << dataset_column(cfg) << ','
    << method_name(cell.method) << ',' << hybrid_name(cell.hybrid) << ','
    << format_double(cell.alpha, "%g") << ',' << metric_name(cfg.metric) << ','
    << format_double(acc_O) << ',' << format_double(acc_1) << ',' << format_double(cjg) << ','
    << format_double(rnb) << ',' << format_double(lo) << ',' << f.connectivity_flops << ','
    << f.gc_prune_flops << ',' << f.mapping_flops << '\n';
  return o.str();
}

}  // namespace

std::string results_csv(const ExperimentConfig& cfg, const ExperimentResult& result) {
  std::string out = csv_header() + "\n";
  for (const auto& r : result.rows)
    out += csv_row(cfg, "mean", r.cell, r.acc_O, r.acc_1, r.acc_cjg, r.acc_rnb, r.acc_lo, r.flops);
  return out;
}

std::string trials_csv(const ExperimentConfig& cfg, const ExperimentResult& result) {
  std::string out = csv_header() + "\n";
  for (const auto& t : result.trials)
    out += csv_row(cfg, std::to_string(t.trial), t.cell, t.acc_O, t.acc_1, t.acc_cjg, t.acc_rnb,
                   t.acc_lo, t.flops);
  return out;
}

std::string summary_text(const ExperimentConfig& cfg, const ExperimentResult& result) {
  std::ostringstream o;
  o << "# configuration\n" << config_text(cfg) << "\n# flops convention\n"
    << flops_formula() << "\n\n# results (mean over " << cfg.trials << " trials)\n";
  for (const auto& r : result.rows) {
    const std::string key = std::string(hybrid_name(r.cell.hybrid)) + "," +
                            std::string(method_name(r.cell.method)) + "," +
                            format_double(r.cell.alpha, "%g");
    o << "[" << key << "]\n"
      << "acc_O = " << format_double(r.acc_O) << "\n"
      << "acc_1 = " << format_double(r.acc_1) << "\n"
      << "acc_cjg = " << format_double(r.acc_cjg) << "\n"
      << "acc_rnb = " << format_double(r.acc_rnb) << "\n"
      << "acc_lo = " << format_double(r.acc_lo) << "\n"
      << "flops_connectivity = " << r.flops.connectivity_flops << "\n"
      << "flops_gc_prune = " << r.flops.gc_prune_flops << "\n"
      << "flops_mapping = " << r.flops.mapping_flops << "\n"
      << "flops_direct_prune = " << r.flops.direct_prune_flops << "\n"
      << "flops_inference_per_sample = " << r.flops.inference_flops_per_sample << "\n";
  }
  o << "\n# per-layer sparsity\n";
  for (const auto& t : result.trials) {
    o << "trial " << t.trial << " [" << hybrid_name(t.cell.hybrid) << ","
      << method_name(t.cell.method) << "," << format_double(t.cell.alpha, "%g") << "]"
      << (t.partial ? " (cap prevented target sparsity)" : "") << "\n";
    for (const auto& s : t.sparsity)
      o << "  layer " << s.layer << ": pruned " << s.pruned << "/" << s.total << " sparsity "
        << format_double(static_cast<double>(s.pruned) / static_cast<double>(s.total))
        << (s.provenance == MaskProvenance::GhostMapped ? " ghost-mapped" : " direct") << "\n";
  }
  return o.str();
}

void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& result,
                   const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const char* name, const std::string& text) {
    std::ofstream out(dir / name, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::Input, "cannot write " + (dir / name).string());
    out << text;
  };
  write("results.csv", results_csv(cfg, result));
  write("trials.csv", trials_csv(cfg, result));
  write("summary.txt", summary_text(cfg, result));
}

}  // namespace gcnet
