#include "pml/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "pml/csv.hpp"
#include "pml/errors.hpp"
#include "pml/label_codec.hpp"
#include "pml/pml_loss.hpp"

namespace pml {

LossSettings LossSettings::from(const TrainConfig& config) {
  const TrainConfig eff = config.effective();
  return {eff.label_sigma, eff.mix, eff.margin, eff.margins};
}

BatchObjective batch_objective(const Model& model, const MatrixXd& inputs, std::span<const int> ages,
                               const StatsSnapshot<double>& stats, const MatrixXd& delta,
                               const LossSettings& settings) {
  const Index n = inputs.cols();
  const Index c = model.shape.classes;
  if (static_cast<Index>(ages.size()) != n || n == 0) throw ShapeError("batch_objective: ages do not match inputs");
  const double inv_n = 1.0 / static_cast<double>(n);

  BatchObjective out;
  out.grad = ModelGradient::zeros(model);
  ForwardTape<double> tape;
  out.features = model.backbone.forward(inputs, tape);
  out.logits = logits(model.head, out.features);
  out.d_logits.resize(c, n);

  if (!settings.margins) {
    for (Index i = 0; i < n; ++i) {
      const auto target = encode(ages[static_cast<std::size_t>(i)], settings.label_sigma, c);
      const auto r = softmax_kl<double>(target, out.logits.col(i));
      out.loss += r.loss * inv_n;
      out.d_logits.col(i) = r.d_logits * inv_n;
    }
  } else {
    out.ordinal = ordinal_forward(model.ordinal, stats, settings.margin);
    out.variational = variational_forward(model.variational, delta, settings.margin);
    MatrixXd d_table = MatrixXd::Zero(c, c);
    VectorXd d_variational = VectorXd::Zero(c);
    for (Index i = 0; i < n; ++i) {
      const int j = ages[static_cast<std::size_t>(i)];
      const auto target = encode(j, settings.label_sigma, c);
      const VectorXd m = combine(*out.ordinal, *out.variational, settings.mix, j);
      const auto pred = predict_margined<double>(out.logits.col(i), m);
      const auto r = pml_loss(target, pred);
      out.loss += r.loss * inv_n;
      out.d_logits.col(i) = r.d_logits * inv_n;
      d_table.row(j) += (settings.mix.lambda * inv_n) * r.d_margins.transpose();
      d_variational += (settings.mix.beta * inv_n) * r.d_margins;
    }
    out.grad.ordinal = ordinal_backward(model.ordinal, *out.ordinal, d_table, settings.margin);
    out.grad.variational = variational_backward(model.variational, *out.variational, d_variational, settings.margin);
  }
  if (!std::isfinite(out.loss)) throw NumericError("non-finite batch loss");

  const auto head_grad = logits_backward(model.head, out.features, out.d_logits);
  out.grad.head = head_grad.weight;
  out.grad.backbone = model.backbone.backward(tape, head_grad.input);
  return out;
}

MatrixXd predict_distributions(const Model& model, const MatrixXd& inputs) {
  const MatrixXd scores = logits(model.head, model.backbone.forward(inputs));
  MatrixXd probs(scores.rows(), scores.cols());
  for (Index i = 0; i < scores.cols(); ++i) probs.col(i) = softmax<double>(scores.col(i));
  return probs;
}

std::vector<double> predict_ages(const Model& model, const MatrixXd& inputs, Decoder decoder) {
  const MatrixXd probs = predict_distributions(model, inputs);
  std::vector<double> ages;
  ages.reserve(static_cast<std::size_t>(probs.cols()));
  for (Index i = 0; i < probs.cols(); ++i) {
    const VectorXd p = probs.col(i);
    ages.push_back(decoder == Decoder::Expectation ? decode_expectation(p) : decode_argmax(p));
  }
  return ages;
}

ErrorSummary evaluate(const Model& model, const Dataset& split, Decoder decoder, const ClassGroups& groups) {
  if (split.size() == 0) throw DataError("cannot evaluate an empty split");
  if (split.dim() != model.shape.input_dim) {
    throw DataError(shape_message("dataset features", model.shape.input_dim, split.dim()));
  }
  if (split.classes > model.shape.classes) throw DataError("dataset has more classes than the model");
  const auto predicted = predict_ages(model, split.features, decoder);
  return summarize_errors(predicted, split.ages, split.sigmas, static_cast<int>(model.shape.classes), groups);
}

namespace {

MarginDumpRow margin_dump(const Model& model, const StatsSnapshot<double>& stats, const MatrixXd& delta,
                          const LossSettings& settings, int epoch, int probe_class) {
  const auto ordinal = ordinal_forward(model.ordinal, stats, settings.margin);
  const auto variational = variational_forward(model.variational, delta, settings.margin);
  MarginDumpRow row;
  row.epoch = epoch;
  row.probe_class = probe_class;
  row.mu = ordinal.raw.col(0);
  row.sigma = ordinal.raw.col(1);
  row.variational = variational.values;
  row.probe_margins = combine(ordinal, variational, settings.mix, probe_class);
  return row;
}

MatrixXd gather(const MatrixXd& features, std::span<const std::size_t> indices) {
  MatrixXd out(features.rows(), static_cast<Index>(indices.size()));
  for (std::size_t i = 0; i < indices.size(); ++i) out.col(static_cast<Index>(i)) = features.col(static_cast<Index>(indices[i]));
  return out;
}

}  // namespace

TrainResult train(const TrainConfig& config, const Dataset& data, const Splits& splits) {
  const TrainConfig cfg = config.effective();
  cfg.validate();
  if (data.classes < 2) throw DataError("training needs at least 2 classes");
  if (splits.train.empty()) throw DataError("training split is empty");
  if (splits.validation.empty()) throw DataError("validation split is empty");
  if (splits.test.empty()) throw DataError("test split is empty");

  const Dataset train_set = data.subset(splits.train);
  const Dataset val_set = data.subset(splits.validation);
  const Dataset test_set = data.subset(splits.test);
  const int c = data.classes;

  TrainResult result;
  result.groups = head_tail_groups(train_set.class_counts());
  const ModelShape shape{data.dim(), cfg.hidden_width, cfg.feature_dim, c, cfg.margin_hidden};
  result.model = Model::create(shape, cfg.seed, cfg.margin_zero_init);
  Model& model = result.model;
  Optimizer<double> optimizer(cfg.optimizer);

  result.plan = cfg.curriculum ? build_plan(train_set.ages, c, cfg.fractions, cfg.seed) : full_plan(train_set.ages, c);
  const int stage_budget = cfg.curriculum ? cfg.stage_epochs : cfg.total_epoch_budget();
  const auto stage_count = static_cast<int>(result.plan.stage_count());

  ClassStatsBank<double> bank(c, cfg.feature_dim);
  InstructorState<double> instructor;
  StatsSnapshot<double> previous = StatsSnapshot<double>::zeros(c, cfg.feature_dim);
  MatrixXd last_delta = MatrixXd::Zero(c, shape.stats_width());
  const LossSettings settings = LossSettings::from(cfg);
  std::mt19937_64 shuffle_rng(cfg.seed ^ 0xb7e151628aed2a6bULL);
  const int probe_class = val_set.ages.front();

  int global_epoch = 0;
  for (int s = 0; s < stage_count; ++s) {
    instructor.stage_index = s;
    const auto& stage = result.plan.stages[static_cast<std::size_t>(s)];
    const Dataset active = train_set.subset(stage.sample_indices);
    std::vector<double> history;

    for (int stage_epoch = 1;; ++stage_epoch) {
      ++global_epoch;
      if (cfg.restat_each_epoch && global_epoch > 1) {
        bank.reset();
        const MatrixXd features = model.backbone.forward(active.features);
        for (Index i = 0; i < features.cols(); ++i) bank.observe(active.ages[static_cast<std::size_t>(i)], features.col(i));
        previous = bank.snapshot(s);
      }
      bank.reset_degenerate_counter();

      std::vector<std::size_t> order(active.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::shuffle(order.begin(), order.end(), shuffle_rng);

      double loss_sum = 0.0;
      for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
        const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
        const std::span<const std::size_t> batch(order.data() + start, stop - start);
        const MatrixXd inputs = gather(active.features, batch);
        std::vector<int> ages;
        for (auto i : batch) ages.push_back(active.ages[i]);

        const MatrixXd features = model.backbone.forward(inputs);
        for (Index i = 0; i < features.cols(); ++i) bank.observe(ages[static_cast<std::size_t>(i)], features.col(i));
        StatsSnapshot<double> current = bank.snapshot(s);
        MatrixXd delta = stage_reference(instructor, current, previous);

        BatchObjective objective;
        try {
          objective = batch_objective(model, inputs, ages, current, delta, settings);
        } catch (const NumericError& e) {
          std::ostringstream msg;
          msg << e.what() << " (stage " << s + 1 << ", epoch " << global_epoch << ", batch samples";
          for (auto i : batch) msg << ' ' << stage.sample_indices[i];
          msg << ')';
          throw NumericError(msg.str());
        }
        result.step_losses.push_back(objective.loss);
        loss_sum += objective.loss * static_cast<double>(batch.size());
        const auto slots = param_slots(model, objective.grad);
        optimizer.step(slots);
        previous = std::move(current);
        last_delta = std::move(delta);
      }

      EpochReport report;
      report.stage = s + 1;
      report.epoch = global_epoch;
      report.stage_epoch = stage_epoch;
      report.train_loss = loss_sum / static_cast<double>(active.size());
      report.train_mae = mean_absolute_error(predict_ages(model, active.features, cfg.decoder), active.ages);
      report.validation = evaluate(model, val_set, cfg.decoder, result.groups);
      report.imbalance_ratio = stage.imbalance_ratio;
      report.degenerate_distances = bank.degenerate_distances();
      result.reports.push_back(report);
      result.margin_dumps.push_back(margin_dump(model, bank.snapshot(s), last_delta, settings, global_epoch, probe_class));
      history.push_back(report.validation.mae);

      const StageDecision decision = decide_stage(
          {s, stage_count, stage_epoch, stage_budget, cfg.patience, cfg.min_improvement}, history);
      if (decision == StageDecision::Continue) continue;
      ++result.stage_transitions;
      if (decision == StageDecision::Advance) {
        instructor.freeze(bank.snapshot(s));
        ++result.instructor_freezes;
      }
      break;
    }
  }

  result.test = evaluate(model, test_set, cfg.decoder, result.groups);
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(cfg.distribution_samples), test_set.size());
  result.test_distributions = predict_distributions(model, test_set.features.leftCols(static_cast<Index>(k)));
  result.test_distribution_ages.assign(test_set.ages.begin(), test_set.ages.begin() + static_cast<std::ptrdiff_t>(k));
  result.stats = std::move(bank);
  return result;
}

Dataset load_or_generate(const TrainConfig& config) {
  if (!config.data_path.empty()) return load_csv(config.data_path);
  return generate(config.data).data;
}

void prepare_run_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory '" + dir.string() + "': " + ec.message());
  const auto probe = dir / ".write_probe";
  {
    std::ofstream out(probe);
    if (!out || !(out << "ok")) throw DataError("output directory '" + dir.string() + "' is not writable");
  }
  std::filesystem::remove(probe, ec);
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  return out;
}

void write_summary_columns(std::ostream& out, const ErrorSummary& s) {
  out << format_real(s.mae) << ',' << format_real(s.head_mae) << ',' << format_real(s.tail_mae) << ','
      << format_real(s.epsilon_error);
  for (double v : s.per_class_mae) out << ',' << format_real(v);
}

}  // namespace

void write_metrics_csv(std::ostream& out, const std::vector<EpochReport>& reports, int classes) {
  out << "stage,epoch,stage_epoch,train_loss,train_mae,val_mae,val_head_mae,val_tail_mae,val_epsilon_error,"
         "imbalance_ratio,degenerate_distances";
  for (int j = 0; j < classes; ++j) out << ",val_mae_class_" << j;
  out << '\n';
  for (const auto& r : reports) {
    out << r.stage << ',' << r.epoch << ',' << r.stage_epoch << ',' << format_real(r.train_loss) << ','
        << format_real(r.train_mae) << ',' << format_real(r.validation.mae) << ','
        << format_real(r.validation.head_mae) << ',' << format_real(r.validation.tail_mae) << ','
        << format_real(r.validation.epsilon_error) << ',' << format_real(r.imbalance_ratio) << ','
        << r.degenerate_distances;
    for (double v : r.validation.per_class_mae) out << ',' << format_real(v);
    out << '\n';
  }
}

void dump_artifacts(const std::filesystem::path& dir, const TrainConfig& config, const TrainResult& result) {
  if (result.reports.empty()) throw StateError("dump_artifacts needs at least one completed epoch");
  const int c = static_cast<int>(result.model.shape.classes);
  {
    auto out = open_output(dir / "metrics.csv");
    write_metrics_csv(out, result.reports, c);
  }
  {
    auto out = open_output(dir / "margins.csv");
    out << "epoch,class,mu,sigma,variational,probe_class";
    for (int k = 0; k < c; ++k) out << ",probe_margin_" << k;
    out << '\n';
    for (const auto& d : result.margin_dumps) {
      for (int j = 0; j < c; ++j) {
        out << d.epoch << ',' << j << ',' << format_real(d.mu[j]) << ',' << format_real(d.sigma[j]) << ','
            << format_real(d.variational[j]) << ',' << d.probe_class;
        for (int k = 0; k < c; ++k) out << ',' << format_real(d.probe_margins[k]);
        out << '\n';
      }
    }
  }
  {
    auto out = open_output(dir / "stats.csv");
    result.stats.write_csv(out);
  }
  {
    auto out = open_output(dir / "distributions.csv");
    out << "sample,age";
    for (int k = 0; k < c; ++k) out << ",p_" << k;
    out << '\n';
    for (Index i = 0; i < result.test_distributions.cols(); ++i) {
      out << i << ',' << result.test_distribution_ages[static_cast<std::size_t>(i)];
      for (int k = 0; k < c; ++k) out << ',' << format_real(result.test_distributions(k, i));
      out << '\n';
    }
  }
  {
    auto out = open_output(dir / "test_metrics.csv");
    out << "split,mae,head_mae,tail_mae,epsilon_error";
    for (int j = 0; j < c; ++j) out << ",mae_class_" << j;
    out << "\ntest,";
    write_summary_columns(out, result.test);
    out << '\n';
  }
  {
    auto out = open_output(dir / "curriculum.csv");
    result.plan.write_csv(out);
  }
  {
    auto out = open_output(dir / "config.txt");
    out << config.to_text();
  }
  save_model(result.model, dir / "model.txt");
}

std::vector<GridPoint> grid_search(const TrainConfig& config, const Dataset& data, const Splits& splits,
                                   std::span<const double> lambdas, std::span<const double> betas) {
  std::vector<GridPoint> points;
  for (double lambda : lambdas) {
    for (double beta : betas) {
      TrainConfig cfg = config;
      cfg.mode = TrainMode::Pml;
      cfg.mix = {lambda, beta};
      const TrainResult r = train(cfg, data, splits);
      points.push_back({lambda, beta, r.reports.back().validation.mae, r.test.mae, r.test.tail_mae});
    }
  }
  return points;
}

}  // namespace pml
