#include "groundsel/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "groundsel/error.hpp"

namespace groundsel {

namespace {

struct ParamState {
  Tensor param;                  // shared handle into the model
  std::vector<double> accum;     // per-step gradient accumulator
  std::vector<double> velocity;  // momentum buffer
  bool is_tpm = false;
};

double finite_or_throw(double v, const char* which, int64_t step, int64_t epoch) {
  if (!std::isfinite(v)) {
    throw DivergenceError(std::string("training diverged: non-finite ") + which + " at step " +
                          std::to_string(step) + " (epoch " + std::to_string(epoch) + ")");
  }
  return v;
}

}  // namespace

TrainResult train_model(GroundingModel& model, const std::vector<PreparedScene>& dataset,
                        const TrainConfig& tc, const LossConfig& lc,
                        const std::function<void(const StepRecord&)>& on_step) {
  if (dataset.empty()) throw ContractError("train_model: dataset is empty");
  if (tc.epochs < 1) throw ContractError("train_model: epochs must be >= 1");
  if (tc.batch_size < 1) throw ContractError("train_model: batch_size must be >= 1");

  std::vector<ParamState> states;
  states.reserve(model.params().items().size());
  for (const auto& [name, tensor] : model.params().items()) {
    ParamState st;
    st.param = tensor;
    st.accum.assign(static_cast<size_t>(tensor.size()), 0.0);
    st.velocity.assign(static_cast<size_t>(tensor.size()), 0.0);
    st.is_tpm = name.rfind("tpm.", 0) == 0;
    states.push_back(std::move(st));
  }

  TrainResult result;
  std::mt19937_64 shuffle_rng(tc.seed);
  std::vector<int64_t> order(dataset.size());
  std::iota(order.begin(), order.end(), int64_t{0});

  int64_t step = 0;
  for (int64_t epoch = 1; epoch <= tc.epochs; ++epoch) {
    double scale = 1.0;
    for (int64_t d : tc.decay_epochs) {
      if (epoch > d) scale *= tc.decay_factor;
    }
    const double lr = tc.lr * scale;
    const double tpm_lr = tc.tpm_lr * scale;

    std::shuffle(order.begin(), order.end(), shuffle_rng);

    EpochRecord er;
    er.epoch = epoch;
    int64_t epoch_steps = 0;

    size_t cursor = 0;
    while (cursor < order.size()) {
      const size_t batch_end = std::min(cursor + static_cast<size_t>(tc.batch_size), order.size());
      const double inv = 1.0 / static_cast<double>(batch_end - cursor);

      for (ParamState& st : states) std::fill(st.accum.begin(), st.accum.end(), 0.0);

      StepRecord rec;
      rec.step = ++step;
      rec.epoch = epoch;

      for (size_t i = cursor; i < batch_end; ++i) {
        const PreparedScene& ps = dataset[static_cast<size_t>(order[i])];
        for (ParamState& st : states) st.param.zero_grad();
        Graph g(true);
        const ForwardResult fr = model.forward(g, ps);
        const LossBreakdown lb = compute_losses(g, fr, ps, lc);
        rec.vg += lb.vg.value();
        rec.dks += lb.dks.value();
        rec.det += lb.det.value();
        rec.lang += lb.lang.value();
        rec.total += finite_or_throw(lb.total.value(), "total loss", rec.step, epoch);
        g.backward(lb.total);
        for (ParamState& st : states) {
          if (!st.param.has_grad()) continue;
          const auto grad = st.param.grad();
          for (size_t k = 0; k < st.accum.size(); ++k) st.accum[k] += grad[k];
        }
      }

      rec.vg *= inv;
      rec.dks *= inv;
      rec.det *= inv;
      rec.lang *= inv;
      rec.total *= inv;

      double sq = 0.0;
      for (ParamState& st : states) {
        for (double& a : st.accum) {
          a *= inv;
          sq += a * a;
        }
      }
      const double norm = std::sqrt(sq);
      finite_or_throw(norm, "gradient norm", rec.step, epoch);
      const double clip = (tc.clip_norm > 0.0 && norm > tc.clip_norm) ? tc.clip_norm / norm : 1.0;

      for (ParamState& st : states) {
        const double group_lr = st.is_tpm ? tpm_lr : lr;
        auto data = st.param.mutable_data();
        for (size_t k = 0; k < st.accum.size(); ++k) {
          st.velocity[k] = tc.momentum * st.velocity[k] + st.accum[k] * clip;
          data[k] -= group_lr * st.velocity[k];
        }
      }

      er.vg += rec.vg;
      er.dks += rec.dks;
      er.det += rec.det;
      er.lang += rec.lang;
      er.total += rec.total;
      ++epoch_steps;

      result.curve.push_back(rec);
      if (on_step) on_step(rec);
      cursor = batch_end;
    }

    const double einv = 1.0 / static_cast<double>(epoch_steps);
    er.vg *= einv;
    er.dks *= einv;
    er.det *= einv;
    er.lang *= einv;
    er.total *= einv;
    result.epochs.push_back(er);
  }
  return result;
}

TrainResult train_model(GroundingModel& model, const std::vector<PreparedScene>& dataset,
                        const TrainConfig& tc, const LossConfig& lc) {
  return train_model(model, dataset, tc, lc, nullptr);
}

void write_loss_log(const std::string& path, const TrainResult& result) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open loss log for writing: " + path);
  f << nlohmann::json{{"schema", "groundsel-loss-log"}, {"version", 1}}.dump() << "\n";
  auto epoch_it = result.epochs.begin();
  for (const StepRecord& r : result.curve) {
    f << nlohmann::json{{"kind", "step"},   {"step", r.step}, {"epoch", r.epoch},
                        {"vg", r.vg},       {"dks", r.dks},   {"det", r.det},
                        {"lang", r.lang},   {"total", r.total}}
             .dump()
      << "\n";
    const bool epoch_done = (&r == &result.curve.back()) || ((&r)[1].epoch != r.epoch);
    if (epoch_done && epoch_it != result.epochs.end()) {
      const EpochRecord& e = *epoch_it++;
      f << nlohmann::json{{"kind", "epoch"}, {"epoch", e.epoch}, {"vg", e.vg},
                          {"dks", e.dks},    {"det", e.det},     {"lang", e.lang},
                          {"total", e.total}}
               .dump()
        << "\n";
    }
  }
  if (!f) throw IoError("failed writing loss log: " + path);
}

}  // namespace groundsel
