#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "granlab/circles.hpp"
#include "granlab/data_real.hpp"
#include "granlab/dataset_io.hpp"
#include "granlab/errors.hpp"
#include "granlab/harness.hpp"
#include "granlab/harness_io.hpp"
#include "granlab/losses.hpp"
#include "granlab/metrics.hpp"
#include "granlab/mlp.hpp"
#include "granlab/plot.hpp"
#include "granlab/train.hpp"

namespace py = pybind11;
using namespace granlab;

namespace {

std::vector<std::uint8_t> to_bytes(const py::bytes& b) {
  const std::string s = b;
  return {s.begin(), s.end()};
}

py::bytes from_bytes(const std::vector<std::uint8_t>& v) {
  return py::bytes(reinterpret_cast<const char*>(v.data()), v.size());
}

}  // namespace

PYBIND11_MODULE(_granlab, m) {
  m.doc() = "Fine- versus coarse-grained training of small dense networks";

  auto base = py::register_exception<Error>(m, "GranlabError");
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<DivergenceError>(m, "DivergenceError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  m.attr("PROB_FLOOR") = kProbFloor;

  py::class_<Hierarchy>(m, "Hierarchy")
      .def(py::init<int, std::vector<int>, std::vector<int>>(), py::arg("K"), py::arg("c0"), py::arg("c1"))
      .def_static("binary", &Hierarchy::binary)
      .def_property_readonly("K", &Hierarchy::K)
      .def_property_readonly("c0", &Hierarchy::c0)
      .def_property_readonly("c1", &Hierarchy::c1)
      .def("coarse_label", &Hierarchy::coarse_label)
      .def("coarse_labels", [](const Hierarchy& h, const std::vector<int>& fine) { return h.coarse_labels(fine); })
      .def("singleton", &Hierarchy::singleton)
      .def(py::self == py::self)
      .def("__repr__", [](const Hierarchy& h) {
        return "Hierarchy(K=" + std::to_string(h.K()) + ", c0=" + py::repr(py::cast(h.c0())).cast<std::string>() +
               ", c1=" + py::repr(py::cast(h.c1())).cast<std::string>() + ")";
      });

  py::class_<LossKind> loss_kind(m, "LossKind");
  py::enum_<LossKind::Kind>(loss_kind, "Kind")
      .value("Coarse", LossKind::Kind::Coarse)
      .value("Fine", LossKind::Kind::Fine)
      .value("IntraClass", LossKind::Kind::IntraClass)
      .value("Hybrid", LossKind::Kind::Hybrid);
  loss_kind.def_readonly("kind", &LossKind::kind)
      .def_readonly("beta", &LossKind::beta)
      .def_static("coarse", &LossKind::coarse)
      .def_static("fine", &LossKind::fine)
      .def_static("intra", &LossKind::intra)
      .def_static("hybrid", &LossKind::hybrid, py::arg("beta"))
      .def("__repr__", [](const LossKind& k) {
        std::string s = std::string("LossKind.") + to_string(k.kind);
        if (k.kind == LossKind::Kind::Hybrid) s += "(" + std::to_string(k.beta) + ")";
        return s;
      });

  m.def("one_hot", [](const std::vector<int>& labels, int K) { return one_hot(labels, K); });
  m.def("labels_from_one_hot", &labels_from_one_hot);
  m.def("loss_coarse", [](const std::vector<double>& p, const std::vector<int>& Y) { return loss_coarse(p, Y); },
        py::arg("coarse_probs"), py::arg("Y"));
  m.def("loss_fine", [](const Matrix& p, const std::vector<int>& y) { return loss_fine(p, y); },
        py::arg("fine_probs"), py::arg("labels"));
  m.def("loss_intra", [](const Matrix& p, const std::vector<int>& y, const Hierarchy& h) { return loss_intra(p, y, h); },
        py::arg("fine_probs"), py::arg("labels"), py::arg("hierarchy"));
  m.def("loss_hybrid",
        [](const Matrix& p, const std::vector<int>& y, const Hierarchy& h, double beta) {
          return loss_hybrid(p, y, h, beta);
        },
        py::arg("fine_probs"), py::arg("labels"), py::arg("hierarchy"), py::arg("beta"));

  py::class_<DecompositionReport>(m, "DecompositionReport")
      .def_readonly("fine", &DecompositionReport::fine)
      .def_readonly("coarse", &DecompositionReport::coarse)
      .def_readonly("intra", &DecompositionReport::intra)
      .def_readonly("residual", &DecompositionReport::residual);
  m.def("verify_decomposition",
        [](const Matrix& p, const std::vector<int>& y, const Hierarchy& h) { return verify_decomposition(p, y, h); },
        py::arg("fine_probs"), py::arg("labels"), py::arg("hierarchy"));

  py::enum_<Activation>(m, "Activation").value("Relu", Activation::Relu).value("Tanh", Activation::Tanh);
  py::enum_<HeadKind>(m, "HeadKind")
      .value("FineSoftmax", HeadKind::FineSoftmax)
      .value("CoarseSigmoid", HeadKind::CoarseSigmoid);

  py::class_<MlpModel>(m, "MlpModel")
      .def_readonly("head", &MlpModel::head)
      .def_readonly("activation", &MlpModel::activation)
      .def_readwrite("hidden_weights", &MlpModel::hidden_weights)
      .def_readwrite("hidden_biases", &MlpModel::hidden_biases)
      .def_readwrite("output_weights", &MlpModel::output_weights)
      .def_readwrite("output_biases", &MlpModel::output_biases)
      .def_property_readonly("input_dim", &MlpModel::input_dim)
      .def_property_readonly("hidden_count", &MlpModel::hidden_count)
      .def_property_readonly("output_dim", &MlpModel::output_dim)
      .def("parameter_count", py::overload_cast<>(&MlpModel::parameter_count, py::const_))
      .def("validate", &MlpModel::validate)
      .def(py::self == py::self);

  m.def("glorot_init", &glorot_init, py::arg("d"), py::arg("N"), py::arg("out_dim"), py::arg("seed"),
        py::arg("activation") = Activation::Relu);
  m.def("parameter_count", py::overload_cast<int, int, int>(&parameter_count), py::arg("d"), py::arg("N"),
        py::arg("out_dim"));
  m.def("match_capacity", &match_capacity, py::arg("N_fine"), py::arg("d"), py::arg("K"));

  py::class_<ForwardTrace>(m, "ForwardTrace")
      .def_readonly("hidden_preactivations", &ForwardTrace::hidden_preactivations)
      .def_readonly("hidden_activations", &ForwardTrace::hidden_activations)
      .def_readonly("preactivations", &ForwardTrace::preactivations)
      .def_readonly("outputs", &ForwardTrace::outputs);
  m.def("forward", &forward, py::arg("model"), py::arg("X"));
  m.def("aggregate_fine_to_coarse", &aggregate_fine_to_coarse, py::arg("fine_probs"), py::arg("hierarchy"));

  py::class_<Gradients>(m, "Gradients")
      .def_readonly("hidden_weights", &Gradients::hidden_weights)
      .def_readonly("hidden_biases", &Gradients::hidden_biases)
      .def_readonly("output_weights", &Gradients::output_weights)
      .def_readonly("output_biases", &Gradients::output_biases)
      .def("squared_norm", &Gradients::squared_norm);
  m.def("trace_loss",
        [](const MlpModel& model, const ForwardTrace& t, const std::vector<int>& labels, LossKind loss,
           const Hierarchy* h) { return trace_loss(model, t, labels, loss, h); },
        py::arg("model"), py::arg("trace"), py::arg("labels"), py::arg("loss"), py::arg("hierarchy") = nullptr);
  m.def("backward",
        [](const MlpModel& model, const Matrix& X, const ForwardTrace& t, const std::vector<int>& labels,
           LossKind loss, const Hierarchy* h) { return backward(model, X, t, labels, loss, h); },
        py::arg("model"), py::arg("X"), py::arg("trace"), py::arg("labels"), py::arg("loss"),
        py::arg("hierarchy") = nullptr);

  py::class_<LabeledDataset>(m, "LabeledDataset")
      .def(py::init<>())
      .def_readwrite("features", &LabeledDataset::features)
      .def_readwrite("fine_labels", &LabeledDataset::fine_labels)
      .def_readwrite("hierarchy", &LabeledDataset::hierarchy)
      .def_readwrite("name", &LabeledDataset::name)
      .def_readwrite("fine_names", &LabeledDataset::fine_names)
      .def_readwrite("circle_index", &LabeledDataset::circle_index)
      .def_property_readonly("K", &LabeledDataset::K)
      .def_property_readonly("dim", &LabeledDataset::dim)
      .def("coarse_labels", &LabeledDataset::coarse_labels)
      .def("one_hot_labels", &LabeledDataset::one_hot_labels)
      .def("subset", [](const LabeledDataset& d, const std::vector<std::size_t>& rows) { return d.subset(rows); })
      .def("validate", &LabeledDataset::validate)
      .def("__len__", &LabeledDataset::size);

  py::class_<CircleSpec>(m, "CircleSpec")
      .def(py::init<>())
      .def(py::init([](int K, int n_points, double redundancy, std::uint64_t seed) {
             CircleSpec s;
             s.K = K;
             s.n_points = n_points;
             s.redundancy = redundancy;
             s.seed = seed;
             return s;
           }),
           py::arg("K") = 8, py::arg("n_points") = 5000, py::arg("redundancy") = 0.0, py::arg("seed") = 0)
      .def_readwrite("K", &CircleSpec::K)
      .def_readwrite("n_points", &CircleSpec::n_points)
      .def_readwrite("redundancy", &CircleSpec::redundancy)
      .def_readwrite("radial_jitter", &CircleSpec::radial_jitter)
      .def_readwrite("sector_offset_per_circle", &CircleSpec::sector_offset_per_circle)
      .def_readwrite("seed", &CircleSpec::seed)
      .def_static("max_redundancy", &CircleSpec::max_redundancy)
      .def("validate", &CircleSpec::validate);
  m.def("generate_circles", &generate_circles, py::arg("spec"));
  m.def("redundancy_of", &redundancy_of, py::arg("data"));

  py::class_<RawImageSet>(m, "RawImageSet")
      .def_readonly("rows", &RawImageSet::rows)
      .def_readonly("cols", &RawImageSet::cols)
      .def_readonly("channels", &RawImageSet::channels)
      .def_property_readonly("pixels", [](const RawImageSet& s) { return from_bytes(s.pixels); })
      .def_property_readonly("labels", [](const RawImageSet& s) { return from_bytes(s.labels); })
      .def_readwrite("class_names", &RawImageSet::class_names)
      .def("__len__", &RawImageSet::count)
      .def_property_readonly("dim", &RawImageSet::dim);
  m.def("parse_idx", [](const py::bytes& images, const py::bytes& labels) {
    return parse_idx(to_bytes(images), to_bytes(labels));
  });
  m.def("parse_cifar10", [](const std::vector<py::bytes>& batches) {
    std::vector<std::vector<std::uint8_t>> files;
    for (const auto& b : batches) files.push_back(to_bytes(b));
    return parse_cifar10(files);
  });
  m.def("serialize_idx_images", [](const RawImageSet& s) { return from_bytes(serialize_idx_images(s)); });
  m.def("serialize_idx_labels", [](const RawImageSet& s) { return from_bytes(serialize_idx_labels(s)); });
  m.def("serialize_cifar10", [](const RawImageSet& s) { return from_bytes(serialize_cifar10(s)); });
  m.def("normalize", [](const RawImageSet& s) { return normalize(s.pixels, s.count(), s.dim()); });

  py::class_<GroupingSpec>(m, "GroupingSpec")
      .def(py::init<std::string, std::vector<std::string>, std::vector<std::string>>(), py::arg("dataset"),
           py::arg("c0_names"), py::arg("c1_names"))
      .def_readwrite("dataset", &GroupingSpec::dataset)
      .def_readwrite("c0_names", &GroupingSpec::c0_names)
      .def_readwrite("c1_names", &GroupingSpec::c1_names)
      .def("fine_class_names", &GroupingSpec::fine_class_names);
  m.def("grouping_preset", &grouping_preset, py::arg("name"));
  m.def("grouping_preset_names", &grouping_preset_names);
  m.def("dataset_class_names", &dataset_class_names, py::arg("dataset"));
  m.def("apply_grouping", &apply_grouping, py::arg("raw"), py::arg("spec"), py::arg("name") = "");
  m.def("subsample", &subsample, py::arg("data"), py::arg("n"), py::arg("seed"), py::arg("stratified") = true);
  py::enum_<Split>(m, "Split").value("Train", Split::Train).value("Test", Split::Test);
  m.def("load_dataset", &load_dataset, py::arg("dataset"), py::arg("dir"), py::arg("split"));

  m.def("dataset_to_json", [](const LabeledDataset& d) { return dataset_to_json(d); });
  m.def("dataset_from_json", &dataset_from_json);

  py::enum_<Optimizer>(m, "Optimizer").value("Sgd", Optimizer::Sgd).value("Adam", Optimizer::Adam);
  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_static("adam_defaults", &TrainConfig::adam_defaults)
      .def_readwrite("optimizer", &TrainConfig::optimizer)
      .def_readwrite("lr_start", &TrainConfig::lr_start)
      .def_readwrite("lr_end", &TrainConfig::lr_end)
      .def_readwrite("max_epochs", &TrainConfig::max_epochs)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("adam_beta1", &TrainConfig::adam_beta1)
      .def_readwrite("adam_beta2", &TrainConfig::adam_beta2)
      .def_readwrite("adam_epsilon", &TrainConfig::adam_epsilon)
      .def_readwrite("early_stop_patience", &TrainConfig::early_stop_patience)
      .def_readwrite("validation_fraction", &TrainConfig::validation_fraction)
      .def_readwrite("seed", &TrainConfig::seed)
      .def("validate", &TrainConfig::validate);

  py::class_<EpochLog>(m, "EpochLog")
      .def_readonly("epoch", &EpochLog::epoch)
      .def_readonly("learning_rate", &EpochLog::learning_rate)
      .def_readonly("train_loss", &EpochLog::train_loss)
      .def_readonly("validation_loss", &EpochLog::validation_loss)
      .def_readonly("train_coarse_accuracy", &EpochLog::train_coarse_accuracy);
  py::class_<TrainingLog>(m, "TrainingLog")
      .def_readonly("epochs", &TrainingLog::epochs)
      .def_readonly("best_epoch", &TrainingLog::best_epoch)
      .def_readonly("best_validation_loss", &TrainingLog::best_validation_loss)
      .def_readonly("stopped_early", &TrainingLog::stopped_early);
  py::class_<TrainedModel>(m, "TrainedModel")
      .def_readonly("model", &TrainedModel::model)
      .def_readonly("log", &TrainedModel::log);
  m.def("train", &train, py::arg("model"), py::arg("data"), py::arg("config"), py::arg("loss"),
        py::call_guard<py::gil_scoped_release>());
  m.def("model_coarse_accuracy", &model_coarse_accuracy, py::arg("model"), py::arg("data"));
  m.def("coarse_accuracy",
        [](const std::vector<double>& p, const std::vector<int>& Y) { return coarse_accuracy(p, Y); },
        py::arg("predicted"), py::arg("Y"));

  py::class_<ComparisonConfig>(m, "ComparisonConfig")
      .def(py::init<>())
      .def_readwrite("fine_hidden", &ComparisonConfig::fine_hidden)
      .def_readwrite("coarse_hidden", &ComparisonConfig::coarse_hidden)
      .def_readwrite("train_config", &ComparisonConfig::train_config)
      .def_readwrite("fine_loss", &ComparisonConfig::fine_loss)
      .def_readwrite("activation", &ComparisonConfig::activation);
  py::class_<RunRecord>(m, "RunRecord")
      .def_readonly("seed", &RunRecord::seed)
      .def_readonly("ok", &RunRecord::ok)
      .def_readonly("error", &RunRecord::error)
      .def_readonly("acc_fine_test", &RunRecord::acc_fine_test)
      .def_readonly("acc_coarse_test", &RunRecord::acc_coarse_test)
      .def_readonly("acc_fine_train", &RunRecord::acc_fine_train)
      .def_readonly("acc_coarse_train", &RunRecord::acc_coarse_train)
      .def_readonly("epochs_fine", &RunRecord::epochs_fine)
      .def_readonly("epochs_coarse", &RunRecord::epochs_coarse)
      .def_readonly("n_fine", &RunRecord::n_fine)
      .def_readonly("n_coarse", &RunRecord::n_coarse)
      .def_readonly("p", &RunRecord::p)
      .def("delta", &RunRecord::delta)
      .def("n_over_p", &RunRecord::n_over_p);
  m.def("run_comparison", &run_comparison, py::arg("train"), py::arg("test"), py::arg("config"), py::arg("seed"),
        py::call_guard<py::gil_scoped_release>());
  m.def("batch_size_for", &batch_size_for, py::arg("train_size"));

  py::enum_<SpreadMode>(m, "SpreadMode")
      .value("Quartiles", SpreadMode::Quartiles)
      .value("StandardError", SpreadMode::StandardError);
  py::class_<Summary>(m, "Summary")
      .def_readonly("center", &Summary::center)
      .def_readonly("low", &Summary::low)
      .def_readonly("high", &Summary::high)
      .def_readonly("spread", &Summary::spread);
  m.def("aggregate", [](const std::vector<double>& v, SpreadMode mode) { return aggregate(v, mode); },
        py::arg("values"), py::arg("mode"));

  // Sweeps take and return JSON documents, the same formats the CLI uses.
  m.def("sweep_json",
        [](const std::string& spec_json, int threads) {
          ExperimentSpec spec = experiment_spec_from_json(spec_json);
          if (threads >= 0) spec.threads = threads;
          SweepResult result;
          {
            py::gil_scoped_release release;
            result = sweep(spec);
          }
          return py::make_tuple(archive_to_json(result), points_to_csv(result.points));
        },
        py::arg("spec_json"), py::arg("threads") = -1,
        "Runs an experiment spec; returns (archive JSON, aggregated CSV).");
  m.def("render_csv_svg", [](const std::string& csv, const std::string& style) {
    const auto points = points_from_csv(csv);
    if (style == "accuracy_vs_size") return render_svg(accuracy_vs_size_plot(points));
    if (style == "delta_vs_axis") return render_svg(delta_vs_axis_plot(points));
    throw ConfigError("unknown plot style '" + style + "'");
  });
}
