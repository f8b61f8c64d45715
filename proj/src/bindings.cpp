// Python bindings for the main engine operations.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "attire/anomaly.hpp"
#include "attire/augment.hpp"
#include "attire/config.hpp"
#include "attire/decode.hpp"
#include "attire/eval.hpp"
#include "attire/losstrain.hpp"

namespace py = pybind11;
using namespace attire;

PYBIND11_MODULE(_attire, m) {
    m.doc() = "Attire-anomaly surveillance engine core operations";

    py::class_<BoundingBox>(m, "BoundingBox")
        .def(py::init([](double cx, double cy, double w, double h) {
                 return BoundingBox{cx, cy, w, h};
             }),
             py::arg("cx"), py::arg("cy"), py::arg("w"), py::arg("h"))
        .def_readwrite("cx", &BoundingBox::cx)
        .def_readwrite("cy", &BoundingBox::cy)
        .def_readwrite("w", &BoundingBox::w)
        .def_readwrite("h", &BoundingBox::h);

    py::class_<ClassLabel>(m, "ClassLabel")
        .def_readonly("id", &ClassLabel::id)
        .def_readonly("name", &ClassLabel::name);

    py::class_<Detection>(m, "Detection")
        .def(py::init([](const BoundingBox& box, int class_id, double score) {
                 Detection d;
                 d.bbox = box;
                 d.label = attire_vocabulary().at(class_id);
                 d.score = score;
                 return d;
             }),
             py::arg("bbox"), py::arg("class_id"), py::arg("score"))
        .def_readwrite("bbox", &Detection::bbox)
        .def_readonly("label", &Detection::label)
        .def_readwrite("score", &Detection::score);

    m.def("bbox_area", &bbox_area);
    m.def("iou", &iou);
    m.def("sigmoid", &sigmoid);
    m.def("softmax", &softmax);
    m.def("class_confidence", &class_confidence);
    m.def("nms", &nms, py::arg("detections"), py::arg("iou_thresh"));

    m.def("attire_classes", [] {
        std::vector<std::string> names;
        for (const auto& label : attire_vocabulary()) names.push_back(label.name);
        return names;
    });

    m.def(
        "decode_tensor_file",
        [](const std::string& path, double conf_floor, double nms_iou) {
            const auto tensor = read_tensor_file(path);
            return nms(decode_grid(tensor, conf_floor, attire_vocabulary()), nms_iou);
        },
        py::arg("path"), py::arg("conf_floor") = 0.25, py::arg("nms_iou") = 0.45);

    m.def(
        "fuzzy_adjust",
        [](double original_conf, double illumination) {
            Anomaly a;
            a.original_conf = original_conf;
            ContextFeatures f;
            f.illumination = illumination;
            return fuzzy_adjust(a, f, default_rule_base());
        },
        py::arg("original_conf"), py::arg("illumination"));

    m.def(
        "adaptive_threshold",
        [](const std::vector<double>& adjusted, double illumination, double base,
           double alpha, double beta) {
            std::vector<Anomaly> anoms;
            for (double c : adjusted) {
                Anomaly a;
                a.adjusted_conf = c;
                anoms.push_back(a);
            }
            ContextFeatures f;
            f.illumination = illumination;
            ThresholdParams tp;
            tp.base = base;
            tp.alpha = alpha;
            tp.beta = beta;
            return adaptive_threshold(anoms, f, tp);
        },
        py::arg("adjusted"), py::arg("illumination") = 0.5, py::arg("base") = 0.5,
        py::arg("alpha") = 0.5, py::arg("beta") = 0.2);

    m.def("precision_recall_f1", [](int tp, int fp, int fn) {
        const auto m2 = precision_recall_f1(tp, fp, fn);
        return py::make_tuple(m2.precision, m2.recall, m2.f1);
    });

    m.def(
        "average_precision",
        [](const std::vector<Detection>& preds, const std::vector<Detection>& gts,
           int class_id, double iou_thresh) {
            return average_precision(preds, gts, class_id, iou_thresh);
        },
        py::arg("predictions"), py::arg("ground_truth"), py::arg("class_id"),
        py::arg("iou_thresh") = 0.5);

    m.def("sample_factors", [](uint64_t seed) {
        const auto f = sample_factors(seed);
        return py::make_tuple(f.hue, f.saturation, f.brightness);
    });

    m.def(
        "train_toy_head",
        [](uint64_t seed, int epochs, double lr) {
            SgdConfig cfg;
            cfg.learning_rate = lr;
            const auto result = train_toy_head(make_separable_toy_fixture(seed), cfg, epochs);
            return result.loss_curve;
        },
        py::arg("seed") = 0, py::arg("epochs") = 500, py::arg("lr") = 0.05);
}
