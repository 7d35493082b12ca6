#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "aquagan/data.hpp"
#include "aquagan/losses.hpp"
#include "aquagan/nets.hpp"
#include "aquagan/params.hpp"
#include "aquagan/report.hpp"

namespace aquagan {

inline constexpr int kClassifierEpochs = 40;
inline constexpr int kClassifierPatience = 5;

int default_epochs(VariantTag tag);

struct TrainConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int batch_size = 8;
  int epochs = kClassifierEpochs;
  // Classifier only; 0 disables early stopping.
  int patience = kClassifierPatience;
  std::uint64_t seed = 0;
  int input_size = 256;
  bool augment = true;
  // Discriminator updates per generator update (L2AGR).
  int disc_ratio = 1;
  // Global cap on optimizer steps, for short runs.
  std::optional<long> max_steps;
  bool deterministic = true;

  void validate() const;
};

// Defaults for a GAN session of the given variant.
TrainConfig gan_config(VariantTag tag);

struct StepRow {
  int epoch = 0;
  long step = 0;
  double total = 0.0;
  // Weighted terms; absent when the term is not part of the objective.
  std::optional<double> gan;
  std::optional<double> sim;
  std::optional<double> ang;
  std::optional<double> gdl;
  std::optional<double> mean_score;
};

struct EpochRow {
  int epoch = 0;
  double train_loss = 0.0;
  std::optional<double> val_loss;
  std::optional<double> val_accuracy;
  std::optional<double> val_psnr;
  std::optional<double> val_ssim;
};

struct TrainLog {
  std::vector<StepRow> steps;
  std::vector<EpochRow> epochs;
};

// `epoch,step,total,gan,sim,ang,gdl,mean_score`; absent values are empty cells.
void write_step_csv(const TrainLog& log, std::ostream& out);
void write_epoch_csv(const TrainLog& log, std::ostream& out);

struct ClassifierResult {
  ParamSet params;  // best-validation parameters
  TrainLog log;
  int best_epoch = 0;
  int epochs_run = 0;
  bool stopped_early = false;
};

// BCE with good -> 0 and bad -> 1. Early stopping monitors validation loss
// (training loss when the validation set is empty).
ClassifierResult train_classifier(const ClassifierSpec& spec, const LabeledImages& train,
                                  const LabeledImages& validation, const TrainConfig& config);

std::vector<double> predict_scores(const Classifier& net, const ParamSet& params,
                                   std::span<const ImageF> images, int batch_size = 8);

// Mean BCE of the scores against the labels (scores clamped to [1e-7, 1-1e-7]).
double classification_loss(std::span<const double> scores, std::span<const QualityLabel> labels);

struct GanData {
  std::vector<ImageF> inputs;
  // Empty for unpaired data.
  std::vector<ImageF> targets;

  bool paired() const { return !targets.empty(); }
  std::size_t size() const { return inputs.size(); }
};

struct GanResult {
  ParamSet generator;      // selected epoch
  ParamSet last_generator;
  ParamSet discriminator;  // unchanged unless the variant trains it
  TrainLog log;
  int best_epoch = 0;
  int epochs_run = 0;
};

// The discriminator is frozen (inference statistics) unless the variant
// trains it. Model selection: best validation PSNR, last epoch without
// validation pairs.
GanResult train_gan(const GanData& data, const PairedImages& validation,
                    const LossVariant& variant, const GeneratorSpec& gen_spec,
                    const ClassifierSpec& disc_spec, const ParamSet& disc_params,
                    const TrainConfig& config,
                    const std::optional<ParamSet>& initial_generator = std::nullopt);

std::vector<ImageF> enhance_images(const Generator& net, const ParamSet& params,
                                   std::span<const ImageF> images, int batch_size = 8);

// Per-pair PSNR/SSIM of G(input) vs. target, UIQM of G(input).
MetricReport evaluate_epoch(const Generator& net, const ParamSet& params,
                            const PairedImages& pairs, int batch_size = 8);

}  // namespace aquagan
