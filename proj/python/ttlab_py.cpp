#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <nlohmann/json.hpp>

#include "ttlab/errors.hpp"
#include "ttlab/gradcore/ops.hpp"
#include "ttlab/modelzoo/train.hpp"
#include "ttlab/synthvid/dataset.hpp"
#include "ttlab/temppattern/importance.hpp"
#include "ttlab/ttattack/attack.hpp"
#include "ttlab/xferbench/experiment.hpp"
#include "ttlab/xferbench/verify.hpp"

namespace py = pybind11;
using namespace ttlab;
using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

namespace {

Tensor to_tensor(const Array& a) {
    Shape shape(a.shape(), a.shape() + a.ndim());
    return Tensor(std::move(shape), std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Tensor& t) {
    Array out(std::vector<py::ssize_t>(t.shape().begin(), t.shape().end()));
    std::copy(t.values().begin(), t.values().end(), out.mutable_data());
    return out;
}

nlohmann::json parse(const std::string& s) { return s.empty() ? nlohmann::json::object() : nlohmann::json::parse(s); }

// Thin handle so Python sees a model with a checkpoint behind it.
struct PyModel {
    modelzoo::ArchSpec arch;
    Model model;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "ttlab native core";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<SpecError>(m, "SpecError", PyExc_ValueError);
    py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
    py::register_exception<RangeError>(m, "RangeError", PyExc_ValueError);
    py::register_exception<ProtocolError>(m, "ProtocolError", PyExc_RuntimeError);
    py::register_exception<NumericFault>(m, "NumericFault", PyExc_ArithmeticError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_IOError);
    py::register_exception<IoError>(m, "IoError", PyExc_IOError);

    py::class_<PyModel>(m, "Model")
        .def_property_readonly("arch", [](const PyModel& p) { return std::string(modelzoo::to_string(p.arch.family)); })
        .def_property_readonly("num_classes", [](const PyModel& p) { return p.model.num_classes(); })
        .def("forward", [](PyModel& p, const Array& x) { return to_array(p.model.forward(to_tensor(x))); })
        .def("predict", [](PyModel& p, const Array& x) { return argmax(p.model.forward(to_tensor(x))).index; })
        .def("loss", [](PyModel& p, const Array& x, int y) { return loss_at(p.model, to_tensor(x), Label{y}); })
        .def("input_gradient",
             [](PyModel& p, const Array& x, int y) { return to_array(input_gradient(p.model, to_tensor(x), Label{y})); });

    m.def("make_model", [](const std::string& family, std::vector<std::size_t> shape, std::size_t classes, std::uint64_t seed) {
        auto arch = modelzoo::make_arch(modelzoo::arch_family_from_string(family), shape, classes, seed);
        return PyModel{arch, modelzoo::build_model(arch)};
    });
    m.def("load_model", [](const std::filesystem::path& path) {
        auto ck = modelzoo::load_checkpoint(path);
        return PyModel{ck.arch, ck.model()};
    });

    m.def("cross_entropy", [](const Array& logits, int y) { return cross_entropy(to_tensor(logits), Label{y}); });
    m.def("temporal_shift", [](const Array& x, long i) { return to_array(ttattack::temporal_shift(to_tensor(x), i)); });
    m.def("weight_matrix", [](const std::string& kind, std::size_t L) {
        return ttattack::build_weight_matrix(ttattack::weight_kind_from_string(kind), L).weights;
    });
    m.def("augmented_gradient", [](PyModel& p, const Array& x, int y, std::size_t L, const std::string& kind,
                                   const std::string& strategy, std::uint64_t seed) {
        const auto W = ttattack::build_weight_matrix(ttattack::weight_kind_from_string(kind), L);
        const ttattack::ShiftStrategy st{ttattack::shift_kind_from_string(strategy), seed};
        return to_array(ttattack::augmented_gradient(p.model, to_tensor(x), Label{y}, W, st));
    });
    m.def("tt_attack", [](PyModel& p, const Array& x, int y, const std::string& config) {
        const auto cfg = ttattack::attack_config_from_json(parse(config));
        const auto r = ttattack::tt_attack(p.model, VideoClip(to_tensor(x)), Label{y}, cfg);
        py::dict d;
        d["adversarial"] = to_array(r.adversarial.tensor());
        d["perturbation"] = to_array(r.perturbation);
        d["loss_trace"] = r.loss_trace;
        d["label"] = cfg.label();
        return d;
    });

    m.def("importance", [](PyModel& p, const Array& x, int y, const std::string& method) {
        return temppattern::importance(temppattern::method_from_string(method), p.model, VideoClip(to_tensor(x)), Label{y}).p;
    });
    m.def("spearman_rho", [](const std::vector<double>& a, const std::vector<double>& b) { return temppattern::spearman_rho(a, b); });

    m.def("generate_dataset", [](const std::string& spec, const std::filesystem::path& out) {
        const auto ds = synthvid::generate(synthvid::dataset_spec_from_json(parse(spec)));
        synthvid::save(ds, out);
        return ds.clips.size();
    });
    m.def("load_clips", [](const std::filesystem::path& path, const std::string& split) {
        const auto ds = synthvid::load(path);
        py::list out;
        for (const auto& c : ds.clips) {
            if (synthvid::to_string(c.split) != split) continue;
            out.append(py::make_tuple(c.id, to_array(c.clip.tensor()), c.label.index));
        }
        return out;
    });
    m.def(
        "train",
        [](const std::string& family, const std::filesystem::path& data, const std::filesystem::path& out,
           std::uint64_t seed, std::size_t epochs, double lr) {
            const auto ds = synthvid::load(data);
            modelzoo::TrainConfig cfg;
            cfg.seed = seed;
            cfg.epochs = epochs;
            cfg.learning_rate = lr;
            const auto arch = modelzoo::make_arch(modelzoo::arch_family_from_string(family), ds.spec.clip_shape(),
                                                  ds.spec.num_classes(), seed);
            py::gil_scoped_release release;
            const auto ck = modelzoo::train(arch, ds, cfg);
            modelzoo::save_checkpoint(ck, out);
            return std::make_pair(ck.meta.train_accuracy, ck.meta.eval_accuracy);
        },
        py::arg("family"), py::arg("data"), py::arg("out"), py::arg("seed") = 0, py::arg("epochs") = 16,
        py::arg("lr") = modelzoo::TrainConfig{}.learning_rate);

    m.def("bench", [](const std::filesystem::path& config, const std::filesystem::path& out) {
        const auto cfg = xferbench::load_experiment_config(config);
        py::gil_scoped_release release;
        xferbench::emit_report(xferbench::run_transfer_experiment(cfg), out);
    });
    m.def("verify", [](std::uint64_t seed, std::size_t coords) {
        std::vector<std::tuple<std::string, bool, std::string>> out;
        for (const auto& r : xferbench::run_verify(seed, coords)) out.emplace_back(r.name, r.passed, r.detail);
        return out;
    }, py::arg("seed") = 0, py::arg("coords") = 10);
}
