#include "cli.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "aquagan/checkpoint.hpp"
#include "aquagan/data.hpp"
#include "aquagan/errors.hpp"
#include "aquagan/manifest.hpp"
#include "aquagan/metrics.hpp"
#include "aquagan/report.hpp"
#include "aquagan/training.hpp"
#include "grid.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace aquagan::cli {

namespace {

struct Common {
  std::string out;
  std::uint64_t seed = 0;
  bool deterministic = false;
  int batch_size = 8;
};

struct TrainOptions {
  std::string data;
  std::optional<int> epochs;
  int patience = kClassifierPatience;
  double lr = 0.001;
  std::optional<int> input_size;
  double val_fraction = 0.14;
  std::optional<std::size_t> val_count;
  bool no_augment = false;
  std::optional<long> max_steps;
};

struct Options {
  Common common;
  TrainOptions train;
  std::string checkpoint;
  std::string backbone = "reference-small-cnn";
  std::string variant;
  std::string generator;
  std::optional<double> lambda_ang;
  std::optional<double> lambda_gdl;
  int disc_ratio = 1;
  std::string input;
  std::string enhanced;
  std::string reference;
  std::string method = "Method";
  std::string dataset = "dataset";
  std::vector<std::string> methods;
  int tile_height = 256;
};

class Run {
 public:
  Run(std::string command, const std::vector<std::string>& argv, const Common& common)
      : start_(std::chrono::steady_clock::now()), out_(common.out) {
    manifest_.command = std::move(command);
    manifest_.argv = argv;
    manifest_.seed = common.seed;
    manifest_.output_dir = out_.generic_string();
    fs::create_directories(out_);
  }

  const fs::path& out() const { return out_; }
  RunManifest& manifest() { return manifest_; }
  fs::path file(const std::string& name) const { return out_ / name; }

  void input(const std::string& key, const std::string& path) { manifest_.inputs[key] = path; }

  void artifact(const fs::path& path) { add_artifact(manifest_, out_, path); }

  template <typename Writer>
  fs::path write_text(const std::string& name, Writer&& writer) {
    const fs::path p = file(name);
    std::ofstream os(p);
    if (!os) throw DataError("cannot write '" + p.string() + "'");
    writer(os);
    os.close();
    artifact(p);
    return p;
  }

  void finish() {
    manifest_.duration_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_manifest(manifest_, file("manifest.json"));
  }

 private:
  std::chrono::steady_clock::time_point start_;
  fs::path out_;
  RunManifest manifest_;
};

std::map<std::string, fs::path> images_by_stem(const fs::path& dir) {
  std::map<std::string, fs::path> out;
  for (const auto& p : list_images(dir)) {
    const auto [it, fresh] = out.emplace(p.stem().string(), p);
    if (!fresh) std::cerr << "warning: duplicate stem '" << it->first << "' in " << dir << ", keeping " << it->second.filename() << '\n';
  }
  return out;
}

std::vector<fs::path> collect_inputs(const fs::path& p) {
  if (fs::is_directory(p)) return list_images(p);
  if (fs::exists(p)) return {p};
  throw DataError("input '" + p.string() + "' does not exist");
}

SplitSpec split_spec(const Options& o) {
  SplitSpec s;
  s.seed = o.common.seed;
  s.fraction = o.train.val_fraction;
  s.count_per_class = o.train.val_count;
  return s;
}

TrainConfig base_config(const Options& o, int default_epochs, int input_size) {
  TrainConfig c;
  c.lr = o.train.lr;
  c.batch_size = o.common.batch_size;
  c.epochs = o.train.epochs.value_or(default_epochs);
  c.patience = o.train.patience;
  c.seed = o.common.seed;
  c.input_size = input_size;
  c.augment = !o.train.no_augment;
  c.disc_ratio = o.disc_ratio;
  c.max_steps = o.train.max_steps;
  c.deterministic = o.common.deterministic;
  c.validate();
  return c;
}

json config_json(const TrainConfig& c) {
  json j = {{"lr", c.lr},
            {"beta1", c.beta1},
            {"beta2", c.beta2},
            {"eps", c.eps},
            {"batch_size", c.batch_size},
            {"max_epochs", c.epochs},
            {"seed", c.seed},
            {"input_size", c.input_size},
            {"augment", c.augment},
            {"deterministic", c.deterministic}};
  j["max_steps"] = c.max_steps ? json(*c.max_steps) : json(nullptr);
  return j;
}

template <typename Sample>
void write_split(Run& run, const Split<Sample>& split, std::uint64_t seed) {
  std::vector<std::string> tr, va;
  for (const auto& s : split.train) tr.push_back(s.id());
  for (const auto& s : split.validation) va.push_back(s.id());
  write_split_json(run.file("split.json"), tr, va, seed);
  run.artifact(run.file("split.json"));
}

void write_logs(Run& run, const TrainLog& log) {
  run.write_text("train_log.csv", [&](std::ostream& os) { write_step_csv(log, os); });
  run.write_text("epochs.csv", [&](std::ostream& os) { write_epoch_csv(log, os); });
}

void write_config(Run& run, const json& config) {
  run.manifest().config = config;
  write_run_config(config, run.file("run_config.txt"));
  run.artifact(run.file("run_config.txt"));
}

int classify_train(const Options& o, const std::vector<std::string>& argv) {
  ClassifierSpec spec;
  spec.backbone = backbone_from_string(o.backbone);
  spec.input_size = o.train.input_size.value_or(256);
  spec.validate();
  const Classifier probe(spec);
  const TrainConfig config = base_config(o, kClassifierEpochs, spec.input_size);

  Run run("classify-train", argv, o.common);
  run.input("data", o.train.data);
  const auto samples = scan_unpaired(o.train.data);
  const auto sp = split(samples, split_spec(o));
  write_split(run, sp, o.common.seed);

  json cfg = config_json(config);
  cfg["patience"] = config.patience;
  cfg["backbone"] = to_string(spec.backbone);
  cfg["validation_fraction"] = o.train.val_fraction;
  if (o.train.val_count) cfg["validation_count"] = *o.train.val_count;
  write_config(run, cfg);

  const auto train = load_unpaired(sp.train, spec.input_size);
  const auto val = load_unpaired(sp.validation, spec.input_size);
  const auto result = train_classifier(spec, train, val, config);

  Checkpoint ck{spec, result.params, {}};
  ck.meta.variant = "classifier";
  ck.meta.epoch = result.best_epoch;
  ck.meta.config = cfg;
  save_checkpoint(run.file("classifier.ckpt"), ck);
  run.artifact(run.file("classifier.ckpt"));
  write_logs(run, result.log);
  run.finish();

  std::cout << "best epoch " << result.best_epoch << " of " << result.epochs_run
            << (result.stopped_early ? " (early stop)" : "") << '\n';
  const auto& last = result.log.epochs[static_cast<std::size_t>(result.best_epoch - 1)];
  if (last.val_accuracy) std::cout << "validation accuracy " << format_metric(*last.val_accuracy) << '\n';
  return kOk;
}

int classify_eval(const Options& o, const std::vector<std::string>& argv) {
  const Checkpoint ck = load_classifier(o.checkpoint);
  const auto& spec = std::get<ClassifierSpec>(ck.spec);
  const Classifier net(spec);
  Run run("classify-eval", argv, o.common);
  run.input("checkpoint", o.checkpoint);
  run.input("data", o.train.data);
  write_config(run, {{"batch_size", o.common.batch_size}, {"threshold", kQualityThreshold},
                     {"input_size", spec.input_size}});

  const auto samples = scan_unpaired(o.train.data);
  std::vector<LabeledPrediction> preds;
  run.write_text("scores.csv", [&](std::ostream& os) {
    os << "image,score,label,truth\n";
    for (const auto& s : samples) {
      const ImageF img = load_resized(s.path, spec.input_size);
      const double score = predict_scores(net, ck.params, std::span<const ImageF>(&img, 1))[0];
      const bool good = is_good_quality(score);
      preds.push_back({s.label == QualityLabel::kGood, good});
      os << s.id() << ',' << format_metric(score) << ',' << (good ? "good" : "bad") << ','
         << to_string(s.label) << '\n';
    }
  });
  const ConfusionCounts counts = tally(preds);
  run.write_text("classification.csv", [&](std::ostream& os) { write_classification_csv(counts, os); });
  run.write_text("classification.md",
                 [&](std::ostream& os) { write_classification_markdown(counts, o.dataset, os); });
  run.finish();
  const auto m = confusion_metrics(counts);
  std::cout << "accuracy " << (m.accuracy ? format_metric(*m.accuracy) : "undefined") << '\n';
  return kOk;
}

int score(const Options& o, const std::vector<std::string>& argv) {
  const Checkpoint ck = load_classifier(o.checkpoint);
  const auto& spec = std::get<ClassifierSpec>(ck.spec);
  const Classifier net(spec);
  const auto files = collect_inputs(o.input);
  Run run("score", argv, o.common);
  run.input("checkpoint", o.checkpoint);
  run.input("input", o.input);
  write_config(run, {{"threshold", kQualityThreshold}, {"input_size", spec.input_size}});

  std::size_t ok = 0;
  run.write_text("scores.csv", [&](std::ostream& os) {
    os << "image,score,label\n";
    for (const auto& f : files) {
      try {
        const ImageF img = load_resized(f, spec.input_size);
        const double s = predict_scores(net, ck.params, std::span<const ImageF>(&img, 1))[0];
        os << f.filename().string() << ',' << format_metric(s) << ','
           << (is_good_quality(s) ? "good" : "bad") << '\n';
        ++ok;
      } catch (const DecodeError& e) {
        std::cerr << "skipped: " << e.what() << '\n';
      }
    }
  });
  run.finish();
  if (ok == 0) throw DataError("no readable images in '" + o.input + "'");
  std::cout << "scored " << ok << " of " << files.size() << " images\n";
  return kOk;
}

int gan_train(const Options& o, const std::vector<std::string>& argv) {
  LossVariant variant = loss_variant(variant_from_string(o.variant));
  if (o.lambda_ang) variant.weights.lambda_ang = *o.lambda_ang;
  if (o.lambda_gdl) variant.weights.lambda_gdl = *o.lambda_gdl;
  variant.weights.validate();

  const Checkpoint disc = load_classifier(o.checkpoint);
  const auto& disc_spec = std::get<ClassifierSpec>(disc.spec);
  GeneratorSpec gen_spec;
  gen_spec.input_size = o.train.input_size.value_or(disc_spec.input_size);
  gen_spec.validate();
  if (gen_spec.input_size != disc_spec.input_size) {
    throw DataError("input size " + std::to_string(gen_spec.input_size) +
                    " differs from the discriminator's " + std::to_string(disc_spec.input_size));
  }
  std::optional<ParamSet> init;
  if (!o.generator.empty()) init = load_generator(o.generator, gen_spec).params;
  TrainConfig config = base_config(o, default_epochs(variant.tag), gen_spec.input_size);
  config.patience = 0;

  const fs::path root = o.train.data;
  GanData data;
  PairedImages validation;
  Run run("gan-train", argv, o.common);
  run.input("data", o.train.data);
  run.input("discriminator", o.checkpoint);
  if (!o.generator.empty()) run.input("generator", o.generator);

  json cfg = config_json(config);
  cfg["variant"] = to_string(variant.tag);
  cfg["weights"] = variant.weights;
  cfg["trains_discriminator"] = variant.trains_discriminator;
  cfg["disc_ratio"] = config.disc_ratio;
  cfg["similarity"] = variant.similarity == SimilarityKind::kL1 ? "L1" : "L2";
  cfg["self_similarity"] = variant.self_similarity;

  if (!variant.requires_pairs) {
    if (!fs::is_directory(root / kBadDir)) {
      throw DataError("variant " + to_string(variant.tag) +
                      " needs unpaired low-quality images under '" + (root / kBadDir).string() + "'");
    }
    const auto samples = scan_class(root, QualityLabel::kBad);
    Split<UnpairedSample> sp{samples, {}};
    write_split(run, sp, o.common.seed);
    for (const auto& s : samples) data.inputs.push_back(load_resized(s.path, gen_spec.input_size));
  } else {
    if (!has_paired_layout(root)) {
      throw DataError("variant " + to_string(variant.tag) + " requires paired data under '" +
                      (root / kInputDir).string() + "' and '" + (root / kTargetDir).string() + "'");
    }
    const auto scan = scan_paired(root);
    for (const auto& p : scan.unmatched) std::cerr << "warning: unmatched file " << p << '\n';
    const auto sp = split(scan.pairs, split_spec(o));
    write_split(run, sp, o.common.seed);
    auto train = load_paired(sp.train, gen_spec.input_size);
    data.inputs = std::move(train.inputs);
    data.targets = std::move(train.targets);
    validation = load_paired(sp.validation, gen_spec.input_size);
    cfg["validation_fraction"] = o.train.val_fraction;
    if (o.train.val_count) cfg["validation_count"] = *o.train.val_count;
  }
  write_config(run, cfg);

  const auto result = train_gan(data, validation, variant, gen_spec, disc_spec, disc.params, config, init);

  Checkpoint gen{gen_spec, result.generator, {}};
  gen.meta.variant = to_string(variant.tag);
  gen.meta.epoch = result.best_epoch;
  gen.meta.weights = variant.weights;
  gen.meta.config = cfg;
  save_checkpoint(run.file("generator.ckpt"), gen);
  run.artifact(run.file("generator.ckpt"));
  gen.params = result.last_generator;
  gen.meta.epoch = result.epochs_run;
  save_checkpoint(run.file("generator_last.ckpt"), gen);
  run.artifact(run.file("generator_last.ckpt"));
  if (variant.trains_discriminator) {
    Checkpoint d{disc_spec, result.discriminator, disc.meta};
    d.meta.epoch = result.epochs_run;
    save_checkpoint(run.file("discriminator.ckpt"), d);
    run.artifact(run.file("discriminator.ckpt"));
  }
  write_logs(run, result.log);
  run.manifest().config["selected_epoch"] = result.best_epoch;
  run.manifest().config["discriminator_checksum_before"] = hex32(disc.params.checksum());
  run.manifest().config["discriminator_checksum_after"] = hex32(result.discriminator.checksum());
  run.finish();
  std::cout << "variant " << to_string(variant.tag) << ": selected epoch " << result.best_epoch
            << " of " << result.epochs_run << '\n';
  return kOk;
}

int enhance(const Options& o, const std::vector<std::string>& argv) {
  const Checkpoint ck = load_generator(o.checkpoint);
  const auto& spec = std::get<GeneratorSpec>(ck.spec);
  const Generator net(spec);
  const auto files = collect_inputs(o.input);
  if (fs::exists(o.common.out) && fs::exists(o.input) &&
      fs::equivalent(fs::absolute(o.common.out), fs::absolute(o.input))) {
    throw Error("output directory must differ from the input directory");
  }
  Run run("enhance", argv, o.common);
  run.input("checkpoint", o.checkpoint);
  run.input("input", o.input);
  write_config(run, {{"input_size", spec.input_size}, {"variant", ck.meta.variant},
                     {"deterministic", o.common.deterministic}});
  std::size_t ok = 0;
  for (const auto& f : files) {
    try {
      const ImageF img = load_resized(f, spec.input_size);
      const ImageF out = enhance_images(net, ck.params, std::span<const ImageF>(&img, 1), 1)[0];
      const fs::path dst = run.file(f.filename().string());
      encode_image(out, dst);
      run.artifact(dst);
      ++ok;
    } catch (const DecodeError& e) {
      std::cerr << "skipped: " << e.what() << '\n';
    }
  }
  run.finish();
  if (ok == 0) throw DataError("no readable images in '" + o.input + "'");
  std::cout << "enhanced " << ok << " of " << files.size() << " images\n";
  return kOk;
}

ImageF at_size(const ImageF& img, const ImageF& like) {
  if (img.height() == like.height() && img.width() == like.width()) return img;
  return resize_to(img, like.height(), like.width());
}

int evaluate(const Options& o, const std::vector<std::string>& argv) {
  const auto enhanced = images_by_stem(o.enhanced);
  const auto reference = images_by_stem(o.reference);
  std::map<std::string, fs::path> inputs;
  if (!o.input.empty()) inputs = images_by_stem(o.input);

  std::vector<std::string> stems;
  for (const auto& [stem, _] : enhanced) {
    if (!reference.count(stem)) continue;
    if (!o.input.empty() && !inputs.count(stem)) continue;
    stems.push_back(stem);
  }
  if (stems.empty()) {
    throw DataError("no matching stems between '" + o.enhanced + "' and '" + o.reference + "'");
  }

  Run run("evaluate", argv, o.common);
  run.input("enhanced", o.enhanced);
  run.input("reference", o.reference);
  if (!o.input.empty()) run.input("input", o.input);
  write_config(run, {{"method", o.method}, {"matched", stems.size()}});

  std::vector<MetricRow> method_rows, input_rows, goal_rows;
  for (const auto& stem : stems) {
    const ImageF e = decode_image(enhanced.at(stem));
    const ImageF r = at_size(decode_image(reference.at(stem)), e);
    method_rows.push_back({stem, psnr(e, r), ssim(e, r), uiqm(e)});
    goal_rows.push_back({stem, 0.0, 0.0, uiqm(r)});
    if (!o.input.empty()) {
      const ImageF i = at_size(decode_image(inputs.at(stem)), e);
      input_rows.push_back({stem, psnr(i, r), ssim(i, r), uiqm(i)});
    }
  }

  std::vector<ComparisonRow> table;
  auto add_report = [&](const std::string& name, const std::string& file, std::vector<MetricRow> rows) {
    const MetricReport rep = build_report(std::move(rows));
    run.write_text(file, [&](std::ostream& os) { write_report_csv(rep, os); });
    table.push_back({name, rep.aggregate.mean_psnr_db, rep.aggregate.mean_ssim, rep.aggregate.mean_uiqm});
    return rep;
  };
  if (!o.input.empty()) add_report("Input", "report_input.csv", std::move(input_rows));
  add_report(o.method, "report_method.csv", std::move(method_rows));
  const MetricReport goal = build_report(std::move(goal_rows));
  table.push_back({"Goal", std::nullopt, std::nullopt, goal.aggregate.mean_uiqm});

  run.write_text("summary.csv", [&](std::ostream& os) {
    os << "method,psnr_db,ssim,uiqm,images\n";
    for (const auto& r : table) {
      os << r.method << ',' << (r.psnr_db ? format_metric(*r.psnr_db) : "") << ','
         << (r.ssim ? format_metric(*r.ssim) : "") << ',' << (r.uiqm ? format_metric(*r.uiqm) : "")
         << ',' << stems.size() << '\n';
    }
  });
  run.write_text("report.md",
                 [&](std::ostream& os) { write_comparison_markdown(table, stems.size(), os); });
  run.finish();
  std::cout << "evaluated " << stems.size() << " images\n";
  return kOk;
}

std::pair<std::string, std::string> method_entry(const std::string& s) {
  const auto eq = s.find('=');
  if (eq != std::string::npos) return {s.substr(0, eq), s.substr(eq + 1)};
  return {fs::path(s).lexically_normal().filename().string().empty()
              ? fs::path(s).lexically_normal().parent_path().filename().string()
              : fs::path(s).lexically_normal().filename().string(),
          s};
}

int grid(const Options& o, const std::vector<std::string>& argv) {
  const auto inputs = images_by_stem(o.input);
  std::vector<std::pair<std::string, std::map<std::string, fs::path>>> methods;
  for (const auto& m : o.methods) {
    auto [label, dir] = method_entry(m);
    methods.emplace_back(label, images_by_stem(dir));
  }
  std::map<std::string, fs::path> reference;
  if (!o.reference.empty()) reference = images_by_stem(o.reference);

  Run run("grid", argv, o.common);
  run.input("input", o.input);
  for (const auto& m : o.methods) run.input("method:" + method_entry(m).first, method_entry(m).second);
  if (!o.reference.empty()) run.input("reference", o.reference);
  write_config(run, {{"tile_height", o.tile_height}, {"methods", o.methods.size()}});

  std::size_t written = 0;
  for (const auto& [stem, in_path] : inputs) {
    std::vector<std::pair<std::string, fs::path>> row{{"Input", in_path}};
    bool complete = true;
    for (const auto& [label, files] : methods) {
      const auto it = files.find(stem);
      if (it == files.end()) {
        std::cerr << "warning: '" << stem << "' missing for " << label << ", skipped\n";
        complete = false;
        break;
      }
      row.emplace_back(label, it->second);
    }
    if (complete && !o.reference.empty()) {
      const auto it = reference.find(stem);
      if (it == reference.end()) {
        std::cerr << "warning: '" << stem << "' has no reference, skipped\n";
        complete = false;
      } else {
        row.emplace_back("Reference", it->second);
      }
    }
    if (!complete) continue;
    std::vector<GridTile> tiles;
    for (const auto& [label, path] : row) tiles.push_back({label, decode_image_u8(path)});
    const fs::path dst = run.file(stem + ".png");
    encode_image(compose_strip(tiles, o.tile_height), dst);
    run.artifact(dst);
    ++written;
  }
  run.finish();
  if (written == 0) throw DataError("no stem present in every directory");
  std::cout << "wrote " << written << " grids\n";
  return kOk;
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--out", o.common.out, "Output directory")->required();
  cmd->add_option("--seed", o.common.seed, "Global seed");
  cmd->add_flag("--deterministic", o.common.deterministic, "Serial, reproducible execution");
  cmd->add_option("--batch-size", o.common.batch_size, "Batch size")->check(CLI::PositiveNumber);
}

void add_training(CLI::App* cmd, Options& o) {
  cmd->add_option("--data", o.train.data, "Dataset root")->required();
  cmd->add_option("--epochs,--max-epochs", o.train.epochs, "Maximum epochs");
  cmd->add_option("--lr", o.train.lr, "Learning rate");
  cmd->add_option("--input-size", o.train.input_size, "Network input side length");
  cmd->add_option("--val-fraction", o.train.val_fraction, "Validation fraction per class");
  cmd->add_option("--val-count", o.train.val_count, "Validation images per class");
  cmd->add_flag("--no-augment", o.train.no_augment, "Disable random flips");
  cmd->add_option("--max-steps", o.train.max_steps, "Stop after this many optimizer steps");
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Underwater image quality classification and enhancement"};
  app.require_subcommand(1);
  Options o;

  auto* ct = app.add_subcommand("classify-train", "Train the quality classifier");
  add_common(ct, o);
  add_training(ct, o);
  ct->add_option("--patience", o.train.patience, "Early-stopping patience in epochs");
  ct->add_option("--backbone", o.backbone, "reference-small-cnn | inception-v3-adapted");

  auto* ce = app.add_subcommand("classify-eval", "Confusion metrics on a labelled tree");
  add_common(ce, o);
  ce->add_option("--checkpoint", o.checkpoint, "Classifier checkpoint")->required();
  ce->add_option("--data", o.train.data, "Dataset root with good/ and bad/")->required();
  ce->add_option("--dataset-name", o.dataset, "Name used in the report");

  auto* sc = app.add_subcommand("score", "Quality scores for an image or directory");
  add_common(sc, o);
  sc->add_option("--checkpoint", o.checkpoint, "Classifier checkpoint")->required();
  sc->add_option("--input,input", o.input, "Image file or directory")->required();

  auto* gt = app.add_subcommand("gan-train", "Train the enhancement generator");
  add_common(gt, o);
  add_training(gt, o);
  gt->add_option("--variant", o.variant, "adv | l1 | l2 | l2a | l2ag | l2agr")->required();
  gt->add_option("--checkpoint,--discriminator", o.checkpoint, "Discriminator checkpoint")->required();
  gt->add_option("--generator", o.generator, "Generator checkpoint to start from");
  gt->add_option("--lambda-ang", o.lambda_ang, "Override the angular weight");
  gt->add_option("--lambda-gdl", o.lambda_gdl, "Override the gradient-difference weight");
  gt->add_option("--disc-ratio", o.disc_ratio, "Discriminator steps per generator step");

  auto* en = app.add_subcommand("enhance", "Run the generator over a directory");
  add_common(en, o);
  en->add_option("--checkpoint", o.checkpoint, "Generator checkpoint")->required();
  en->add_option("--input,--data", o.input, "Input image or directory")->required();

  auto* ev = app.add_subcommand("evaluate", "PSNR/SSIM/UIQM report");
  add_common(ev, o);
  ev->add_option("--enhanced", o.enhanced, "Enhanced images")->required();
  ev->add_option("--reference", o.reference, "Reference images")->required();
  ev->add_option("--input", o.input, "Original inputs (adds an Input row)");
  ev->add_option("--method", o.method, "Name of the evaluated method");

  auto* gr = app.add_subcommand("grid", "Side-by-side comparison strips");
  add_common(gr, o);
  gr->add_option("--input", o.input, "Input images")->required();
  gr->add_option("--method", o.methods, "Enhanced directory, optionally label=dir")->required();
  gr->add_option("--reference", o.reference, "Reference images");
  gr->add_option("--tile-height", o.tile_height, "Tile height in pixels")->check(CLI::PositiveNumber);

  std::vector<std::string> argv{"aquagan"};
  argv.insert(argv.end(), args.begin(), args.end());
  std::vector<char*> cargv;
  for (auto& a : argv) cargv.push_back(a.data());
  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  using Handler = int (*)(const Options&, const std::vector<std::string>&);
  const std::pair<CLI::App*, Handler> table[] = {{ct, classify_train}, {ce, classify_eval},
                                                 {sc, score},          {gt, gan_train},
                                                 {en, enhance},        {ev, evaluate},
                                                 {gr, grid}};
  try {
    for (const auto& [cmd, handler] : table)
      if (cmd->parsed()) return handler(o, args);
  } catch (const NumericError& e) {
    std::cerr << "aquagan: numeric failure: " << e.what() << '\n';
    return kNumericFailure;
  } catch (const DataError& e) {
    std::cerr << "aquagan: " << e.what() << '\n';
    return kDataError;
  } catch (const DecodeError& e) {
    std::cerr << "aquagan: " << e.what() << '\n';
    return kDataError;
  } catch (const CheckpointError& e) {
    std::cerr << "aquagan: " << e.what() << '\n';
    return kDataError;
  } catch (const DimensionError& e) {
    std::cerr << "aquagan: " << e.what() << '\n';
    return kDataError;
  } catch (const Error& e) {
    std::cerr << "aquagan: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "aquagan: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}

}  // namespace aquagan::cli
