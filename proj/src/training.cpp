#include "aquagan/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "aquagan/errors.hpp"
#include "aquagan/metrics.hpp"
#include "aquagan/optimizer.hpp"
#include "aquagan/rng.hpp"

namespace aquagan {

namespace {

constexpr std::uint64_t kOrderStream = 0x6f72646572ULL;
constexpr std::uint64_t kInitStream = 0x696e6974ULL;

void require_finite(double v, const char* what, int epoch, long step) {
  if (!std::isfinite(v)) {
    throw NumericError(std::string("non-finite ") + what + " at epoch " + std::to_string(epoch) +
                       ", step " + std::to_string(step));
  }
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, kOrderStream, static_cast<std::uint64_t>(epoch)));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

Tensor gather(std::span<const ImageF> images, std::span<const std::size_t> idx,
              const TrainConfig& config, int epoch, bool flip) {
  std::vector<ImageF> batch;
  batch.reserve(idx.size());
  for (std::size_t i : idx) {
    const FlipPlan plan = flip ? flip_plan(config.seed, i, static_cast<std::uint64_t>(epoch))
                               : FlipPlan{};
    batch.push_back(apply_flips(images[i], plan));
  }
  return stack_images(std::span<const ImageF>(batch));
}

std::vector<double> to_doubles(const Tensor& t) {
  return std::vector<double>(t.values().begin(), t.values().end());
}

Tensor score_tensor(std::span<const double> g) {
  Tensor t(Shape{static_cast<int>(g.size()), 1, 1, 1});
  for (std::size_t i = 0; i < g.size(); ++i) t[i] = static_cast<float>(g[i]);
  return t;
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double label_value(QualityLabel l) { return l == QualityLabel::kBad ? 1.0 : 0.0; }

// Softplus(z) - y z, stable for large |z|.
double bce_logit(double z, double y) {
  return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

AdamConfig adam_config(const TrainConfig& c) { return {c.lr, c.beta1, c.beta2, c.eps}; }

void put(std::ostream& out, const std::optional<double>& v) {
  out << ',';
  if (v) out << format_metric(*v);
}

}  // namespace

int default_epochs(VariantTag tag) {
  switch (tag) {
    case VariantTag::kAdv:
      return 34;
    case VariantTag::kL2AGR:
      return 20;
    default:
      return 55;
  }
}

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw Error("learning rate must be positive");
  if (batch_size < 1) throw Error("batch size must be at least 1");
  if (epochs < 1) throw Error("epochs must be at least 1");
  if (patience < 0) throw Error("patience must be non-negative");
  if (disc_ratio < 0) throw Error("discriminator ratio must be non-negative");
  if (max_steps && *max_steps < 1) throw Error("max steps must be at least 1");
}

TrainConfig gan_config(VariantTag tag) {
  TrainConfig c;
  c.epochs = default_epochs(tag);
  c.patience = 0;
  return c;
}

void write_step_csv(const TrainLog& log, std::ostream& out) {
  out << "epoch,step,total,gan,sim,ang,gdl,mean_score\n";
  for (const auto& r : log.steps) {
    out << r.epoch << ',' << r.step << ',' << format_metric(r.total);
    put(out, r.gan);
    put(out, r.sim);
    put(out, r.ang);
    put(out, r.gdl);
    put(out, r.mean_score);
    out << '\n';
  }
}

void write_epoch_csv(const TrainLog& log, std::ostream& out) {
  out << "epoch,train_loss,val_loss,val_accuracy,val_psnr,val_ssim\n";
  for (const auto& r : log.epochs) {
    out << r.epoch << ',' << format_metric(r.train_loss);
    put(out, r.val_loss);
    put(out, r.val_accuracy);
    put(out, r.val_psnr);
    put(out, r.val_ssim);
    out << '\n';
  }
}

double classification_loss(std::span<const double> scores, std::span<const QualityLabel> labels) {
  if (scores.size() != labels.size()) throw DimensionError("score and label counts differ");
  if (scores.empty()) throw DataError("empty score set");
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double s = std::clamp(scores[i], kScoreClamp, 1.0 - kScoreClamp);
    sum += labels[i] == QualityLabel::kBad ? -std::log(s) : -std::log(1.0 - s);
  }
  return sum / static_cast<double>(scores.size());
}

std::vector<double> predict_scores(const Classifier& net, const ParamSet& params,
                                   std::span<const ImageF> images, int batch_size) {
  std::vector<double> out;
  out.reserve(images.size());
  const std::size_t b = static_cast<std::size_t>(std::max(1, batch_size));
  for (std::size_t i = 0; i < images.size(); i += b) {
    const auto chunk = images.subspan(i, std::min(b, images.size() - i));
    const Tensor scores = net.forward(params, stack_images(chunk));
    for (float s : scores.values()) out.push_back(s);
  }
  return out;
}

ClassifierResult train_classifier(const ClassifierSpec& spec, const LabeledImages& train,
                                  const LabeledImages& validation, const TrainConfig& config) {
  config.validate();
  if (train.size() == 0) throw DataError("empty training set");
  const auto bad = std::count(train.labels.begin(), train.labels.end(), QualityLabel::kBad);
  if (bad == 0 || static_cast<std::size_t>(bad) == train.size()) {
    throw DataError("training data contains a single class");
  }

  const Classifier net(spec);
  ParamSet params = net.init_params(derive_seed(config.seed, kInitStream, 0));
  ParamSet grads = params.zeros_like();
  Adam adam(params, adam_config(config));

  ClassifierResult result;
  result.params = params;
  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;
  long step = 0;
  const std::size_t b = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto order = epoch_order(train.size(), config.seed, epoch);
    double epoch_loss = 0.0;
    std::size_t seen = 0;
    bool capped = false;
    for (std::size_t start = 0; start < order.size(); start += b) {
      const std::span<const std::size_t> idx(order.data() + start, std::min(b, order.size() - start));
      const Tensor x = gather(train.images, idx, config, epoch, config.augment);
      NetCache cache;
      const Tensor scores = net.forward_train(params, x, cache);
      const Tensor& z = net.logits(cache);
      Tensor gz(z.shape());
      double loss = 0.0;
      const double inv = 1.0 / static_cast<double>(idx.size());
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const double y = label_value(train.labels[idx[k]]);
        loss += bce_logit(z[k], y);
        gz[k] = static_cast<float>((static_cast<double>(scores[k]) - y) * inv);
      }
      loss *= inv;
      ++step;
      require_finite(loss, "classifier loss", epoch, step);
      grads.zero();
      net.backward_logits(params, cache, gz, &grads, nullptr);
      adam.step(params, grads);

      StepRow row;
      row.epoch = epoch;
      row.step = step;
      row.total = loss;
      row.mean_score = mean_of(to_doubles(scores));
      result.log.steps.push_back(row);
      epoch_loss += loss * static_cast<double>(idx.size());
      seen += idx.size();
      if (config.max_steps && step >= *config.max_steps) {
        capped = true;
        break;
      }
    }

    EpochRow erow;
    erow.epoch = epoch;
    erow.train_loss = epoch_loss / static_cast<double>(seen);
    double monitored = erow.train_loss;
    if (validation.size() > 0) {
      const auto scores = predict_scores(net, params, validation.images, config.batch_size);
      erow.val_loss = classification_loss(scores, validation.labels);
      std::size_t correct = 0;
      for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted_good = is_good_quality(scores[i]);
        correct += predicted_good == (validation.labels[i] == QualityLabel::kGood);
      }
      erow.val_accuracy = static_cast<double>(correct) / static_cast<double>(scores.size());
      monitored = *erow.val_loss;
    }
    require_finite(monitored, "validation loss", epoch, step);
    result.log.epochs.push_back(erow);
    result.epochs_run = epoch;

    if (monitored < best) {
      best = monitored;
      since_best = 0;
      result.best_epoch = epoch;
      result.params = params;
    } else {
      ++since_best;
    }
    if (capped) break;
    if (config.patience > 0 && since_best >= config.patience) {
      result.stopped_early = epoch < config.epochs;
      break;
    }
  }
  return result;
}

std::vector<ImageF> enhance_images(const Generator& net, const ParamSet& params,
                                   std::span<const ImageF> images, int batch_size) {
  std::vector<ImageF> out;
  out.reserve(images.size());
  const std::size_t b = static_cast<std::size_t>(std::max(1, batch_size));
  for (std::size_t i = 0; i < images.size(); i += b) {
    const auto chunk = images.subspan(i, std::min(b, images.size() - i));
    const Tensor y = net.forward(params, stack_images(chunk));
    for (int n = 0; n < y.shape().n; ++n) out.push_back(image_from_tensor(y, n));
  }
  return out;
}

MetricReport evaluate_epoch(const Generator& net, const ParamSet& params,
                            const PairedImages& pairs, int batch_size) {
  if (pairs.size() == 0) throw DataError("empty validation set");
  const auto outputs = enhance_images(net, params, pairs.inputs, batch_size);
  std::vector<MetricRow> rows;
  rows.reserve(outputs.size());
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    MetricRow r;
    r.image = i < pairs.ids.size() ? pairs.ids[i] : std::to_string(i);
    r.psnr_db = psnr(outputs[i], pairs.targets[i]);
    r.ssim = ssim(outputs[i], pairs.targets[i]);
    r.uiqm = uiqm(outputs[i]);
    rows.push_back(std::move(r));
  }
  return build_report(std::move(rows));
}

GanResult train_gan(const GanData& data, const PairedImages& validation,
                    const LossVariant& variant, const GeneratorSpec& gen_spec,
                    const ClassifierSpec& disc_spec, const ParamSet& disc_params,
                    const TrainConfig& config, const std::optional<ParamSet>& initial_generator) {
  config.validate();
  if (data.size() == 0) throw DataError("empty training set");
  if (variant.requires_pairs && !data.paired()) {
    throw DataError("variant " + to_string(variant.tag) + " requires paired data");
  }
  if (!variant.requires_pairs && data.paired()) {
    throw DataError("variant " + to_string(variant.tag) + " trains on unpaired low-quality images");
  }
  if (data.paired() && data.targets.size() != data.inputs.size()) {
    throw DataError("input and target counts differ");
  }
  if (gen_spec.input_size != disc_spec.input_size) {
    throw DataError("generator and discriminator input sizes differ");
  }

  const Generator gen(gen_spec);
  const Classifier disc(disc_spec);
  GanResult result;
  ParamSet gp = initial_generator ? *initial_generator
                                  : gen.init_params(derive_seed(config.seed, kInitStream, 0));
  ParamSet gg = gp.zeros_like();
  Adam gopt(gp, adam_config(config));
  result.discriminator = disc_params;
  ParamSet& dp = result.discriminator;
  ParamSet dg = dp.zeros_like();
  std::optional<Adam> dopt;
  if (variant.trains_discriminator) dopt.emplace(dp, adam_config(config));

  const bool use_validation = variant.requires_pairs && validation.size() > 0;
  double best_psnr = -std::numeric_limits<double>::infinity();
  long step = 0;
  const std::size_t b = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto order = epoch_order(data.size(), config.seed, epoch);
    double epoch_loss = 0.0;
    std::size_t seen = 0;
    bool capped = false;
    for (std::size_t start = 0; start < order.size(); start += b) {
      const std::span<const std::size_t> idx(order.data() + start, std::min(b, order.size() - start));
      const Tensor x = gather(data.inputs, idx, config, epoch, config.augment);
      std::optional<Tensor> y;
      if (data.paired()) y = gather(data.targets, idx, config, epoch, config.augment);

      NetCache gcache;
      const Tensor fake = gen.forward_train(gp, x, gcache);

      NetCache dcache;
      const Tensor scores_t = variant.trains_discriminator ? disc.forward_train(dp, fake, dcache)
                                                           : disc.forward(dp, fake, &dcache);
      const auto scores = to_doubles(scores_t);
      const auto loss = composite_loss<float>(variant, x, y ? &*y : nullptr, fake, scores);
      ++step;
      require_finite(loss.total, "generator loss", epoch, step);

      Tensor grad_fake = loss.grad_generated;
      if (!loss.grad_scores.empty()) {
        Tensor through(fake.shape());
        disc.backward(dp, dcache, score_tensor(loss.grad_scores), nullptr, &through);
        ops::add_inplace(grad_fake, through);
      }
      gg.zero();
      gen.backward(gp, gcache, grad_fake, gg, nullptr);
      gopt.step(gp, gg);

      if (dopt) {
        const Tensor& real = y ? *y : x;
        for (int r = 0; r < config.disc_ratio; ++r) {
          NetCache real_cache;
          NetCache fake_cache;
          const auto rs = to_doubles(disc.forward_train(dp, real, real_cache));
          const auto fs = to_doubles(disc.forward_train(dp, fake, fake_cache));
          const auto dl = adversarial_discriminator_loss(rs, fs);
          require_finite(dl.value, "discriminator loss", epoch, step);
          dg.zero();
          disc.backward(dp, real_cache, score_tensor(dl.grad_real), &dg, nullptr);
          disc.backward(dp, fake_cache, score_tensor(dl.grad_fake), &dg, nullptr);
          dopt->step(dp, dg);
        }
      }

      StepRow row;
      row.epoch = epoch;
      row.step = step;
      row.total = loss.total;
      if (loss.terms.gan) row.gan = loss.terms.gan->weighted();
      if (loss.terms.sim) row.sim = loss.terms.sim->weighted();
      if (loss.terms.ang) row.ang = loss.terms.ang->weighted();
      if (loss.terms.gdl) row.gdl = loss.terms.gdl->weighted();
      row.mean_score = mean_of(scores);
      result.log.steps.push_back(row);
      epoch_loss += loss.total * static_cast<double>(idx.size());
      seen += idx.size();
      if (config.max_steps && step >= *config.max_steps) {
        capped = true;
        break;
      }
    }

    EpochRow erow;
    erow.epoch = epoch;
    erow.train_loss = epoch_loss / static_cast<double>(seen);
    result.epochs_run = epoch;
    if (use_validation) {
      const auto report = evaluate_epoch(gen, gp, validation, config.batch_size);
      erow.val_psnr = report.aggregate.mean_psnr_db;
      erow.val_ssim = report.aggregate.mean_ssim;
      if (*erow.val_psnr > best_psnr) {
        best_psnr = *erow.val_psnr;
        result.best_epoch = epoch;
        result.generator = gp;
      }
    }
    result.log.epochs.push_back(erow);
    if (capped) break;
  }
  result.last_generator = gp;
  if (!use_validation || result.best_epoch == 0) {
    result.generator = gp;
    result.best_epoch = result.epochs_run;
  }
  return result;
}

}  // namespace aquagan
