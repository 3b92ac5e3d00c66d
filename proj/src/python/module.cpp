#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "trendrul/cmapss.hpp"
#include "trendrul/emd.hpp"
#include "trendrul/ensemble.hpp"
#include "trendrul/metrics.hpp"
#include "trendrul/neural.hpp"
#include "trendrul/timeseries.hpp"

namespace py = pybind11;
using namespace trendrul;

namespace {

py::dict decomposition_to_dict(const emd::Decomposition& d) {
  py::list imfs;
  for (const auto& imf : d.imfs) imfs.append(imf.values);
  py::dict out;
  out["imfs"] = imfs;
  out["residue"] = d.residue.values;
  return out;
}

emd::Decomposition decomposition_from_lists(
    const std::vector<std::vector<double>>& imfs,
    const std::vector<double>& residue) {
  emd::Decomposition d;
  d.source_length = static_cast<int>(residue.size());
  for (const auto& imf : imfs) d.imfs.emplace_back(imf);
  d.residue = Series(residue);
  return d;
}

emd::SiftConfig sift_config(double sd_threshold, int max_sift_iterations,
                            int boundary_mirror_count) {
  emd::SiftConfig cfg;
  cfg.sd_threshold = sd_threshold;
  cfg.max_sift_iterations = max_sift_iterations;
  cfg.boundary_mirror_count = boundary_mirror_count;
  return cfg;
}

ensemble::EnsembleConfig ensemble_config(int realizations, double noise_std,
                                         bool adaptive_noise,
                                         int max_total_sift_iterations,
                                         std::uint64_t seed) {
  ensemble::EnsembleConfig cfg;
  cfg.realizations = realizations;
  cfg.noise_std = noise_std;
  cfg.adaptive_noise = adaptive_noise;
  cfg.max_total_sift_iterations = max_total_sift_iterations;
  cfg.base_seed = seed;
  return cfg;
}

// Thin training facade over the sequence regressor.
class Regressor {
 public:
  Regressor(neural::TrainState state) : state_(std::move(state)) {}

  static Regressor train(
      const std::vector<std::pair<Eigen::MatrixXd, Eigen::VectorXd>>& data,
      int hidden1, int hidden2, double dropout, int label_cap,
      double learning_rate, int max_iterations, int batch_size,
      std::uint64_t seed) {
    std::vector<neural::SequenceExample> examples;
    examples.reserve(data.size());
    for (const auto& [features, labels] : data) {
      neural::SequenceExample ex;
      ex.features = features;
      ex.labels.resize(labels.size());
      for (Eigen::Index t = 0; t < labels.size(); ++t) {
        ex.labels(t) = neural::normalize_rul(labels(t), label_cap);
      }
      ex.mask.assign(static_cast<std::size_t>(features.rows()), true);
      examples.push_back(std::move(ex));
    }
    neural::NetworkConfig cfg;
    cfg.layer_sizes = {hidden1, hidden2};
    cfg.dropout_prob = dropout;
    cfg.label_cap = label_cap;
    cfg.adam.alpha = learning_rate;
    cfg.max_iterations = max_iterations;
    cfg.batch_size = batch_size;
    return Regressor(neural::train(cfg, examples, seed));
  }

  std::vector<double> predict(const Eigen::MatrixXd& features) const {
    return neural::predict(state_, features).per_cycle_rul.values;
  }

  double predict_last(const Eigen::MatrixXd& features) const {
    return neural::predict(state_, features).last_point;
  }

  std::vector<double> loss_history() const { return state_.loss_history; }

  void save(const std::string& path) const {
    neural::save_checkpoint(state_, path);
  }

  static Regressor load(const std::string& path) {
    return Regressor(neural::load_checkpoint(path));
  }

 private:
  neural::TrainState state_;
};

}  // namespace

PYBIND11_MODULE(_trendrul, m) {
  m.doc() = "CEEMD trend features and LSTM remaining-useful-life prediction";
  m.attr("__version__") = TRENDRUL_VERSION;

  m.def(
      "sliding_mean",
      [](const std::vector<double>& values, int window) {
        return sliding_mean(Series(values), window).values;
      },
      py::arg("values"), py::arg("window") = 5,
      "Centered moving average with truncated boundary windows.");

  m.def(
      "min_max_normalize",
      [](double x, double lo, double hi) {
        return min_max_normalize(x, NormalizationStats{lo, hi, 0});
      },
      py::arg("x"), py::arg("min"), py::arg("max"));

  m.def(
      "emd",
      [](const std::vector<double>& values, double sd_threshold,
         int max_sift_iterations, int boundary_mirror_count,
         int max_total_sift_iterations) {
        return decomposition_to_dict(emd::emd(
            Series(values),
            sift_config(sd_threshold, max_sift_iterations,
                        boundary_mirror_count),
            max_total_sift_iterations));
      },
      py::arg("values"), py::arg("sd_threshold") = 0.2,
      py::arg("max_sift_iterations") = 5000,
      py::arg("boundary_mirror_count") = 2,
      py::arg("max_total_sift_iterations") = 5000,
      "Empirical mode decomposition into IMFs plus a residue.");

  m.def(
      "eemd",
      [](const std::vector<double>& values, int realizations, double noise_std,
         std::uint64_t seed, bool adaptive_noise,
         int max_total_sift_iterations, double sd_threshold) {
        return decomposition_to_dict(
            ensemble::eemd(Series(values),
                           ensemble_config(realizations, noise_std,
                                           adaptive_noise,
                                           max_total_sift_iterations, seed),
                           sift_config(sd_threshold, 5000, 2)));
      },
      py::arg("values"), py::arg("realizations") = 100,
      py::arg("noise_std") = 0.02, py::arg("seed") = 0,
      py::arg("adaptive_noise") = false,
      py::arg("max_total_sift_iterations") = 5000,
      py::arg("sd_threshold") = 0.2);

  m.def(
      "ceemd",
      [](const std::vector<double>& values, int realizations, double noise_std,
         std::uint64_t seed, bool adaptive_noise,
         int max_total_sift_iterations, double sd_threshold) {
        return decomposition_to_dict(
            ensemble::ceemd(Series(values),
                            ensemble_config(realizations, noise_std,
                                            adaptive_noise,
                                            max_total_sift_iterations, seed),
                            sift_config(sd_threshold, 5000, 2)));
      },
      py::arg("values"), py::arg("realizations") = 100,
      py::arg("noise_std") = 0.02, py::arg("seed") = 0,
      py::arg("adaptive_noise") = false,
      py::arg("max_total_sift_iterations") = 5000,
      py::arg("sd_threshold") = 0.2,
      "Complete ensemble empirical mode decomposition.");

  m.def(
      "trend_feature",
      [](const std::vector<std::vector<double>>& imfs,
         const std::vector<double>& residue, int v) {
        return ensemble::trend_feature(decomposition_from_lists(imfs, residue),
                                       v)
            .values.values;
      },
      py::arg("imfs"), py::arg("residue"), py::arg("v"),
      "Q_v: residue plus the v slowest modes.");

  m.def(
      "label_rul",
      [](int cycles, int final_rul, int cap) {
        cmapss::EngineUnit unit;
        unit.unit_id = 0;
        unit.final_rul = final_rul;
        unit.sensors = Eigen::MatrixXd::Zero(cycles, 1);
        unit.op_settings = Eigen::MatrixXd::Zero(cycles, 3);
        return cmapss::label_rul(unit, cap).values;
      },
      py::arg("cycles"), py::arg("final_rul") = 0, py::arg("cap") = 130,
      "Piecewise-linear capped RUL labels for a unit.");

  m.def(
      "phm_score",
      [](const std::vector<double>& pred, const std::vector<double>& truth,
         double a_early, double a_late) {
        return metrics::phm_score(pred, truth, {a_early, a_late});
      },
      py::arg("predicted"), py::arg("truth"), py::arg("a_early") = 13.0,
      py::arg("a_late") = 15.0,
      "Asymmetric exponential PHM-challenge score.");

  m.def(
      "rmse",
      [](const std::vector<double>& pred, const std::vector<double>& truth) {
        return metrics::rmse(pred, truth);
      },
      py::arg("predicted"), py::arg("truth"));

  py::class_<Regressor>(m, "Regressor")
      .def_static(
          "train", &Regressor::train, py::arg("sequences"),
          py::arg("hidden1") = 128, py::arg("hidden2") = 100,
          py::arg("dropout") = 0.5, py::arg("label_cap") = 130,
          py::arg("learning_rate") = 1e-3, py::arg("max_iterations") = 100,
          py::arg("batch_size") = 32, py::arg("seed") = 0,
          "Train the masked two-layer LSTM regressor on (features, RUL "
          "labels) sequence pairs.")
      .def("predict", &Regressor::predict, py::arg("features"),
           "Per-cycle RUL trajectory for one unit.")
      .def("predict_last", &Regressor::predict_last, py::arg("features"))
      .def("loss_history", &Regressor::loss_history)
      .def("save", &Regressor::save, py::arg("path"))
      .def_static("load", &Regressor::load, py::arg("path"));
}
