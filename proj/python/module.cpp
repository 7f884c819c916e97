#include "cmc/bench.hpp"
#include "cmc/errors.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <variant>

namespace py = pybind11;
using namespace cmc;

namespace {

Dataset from_arrays(const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
                    const std::vector<std::string>& y) {
    if (x.ndim() != 2) {
        throw data_error("X must be a 2-d array");
    }
    const auto n = static_cast<std::size_t>(x.shape(0));
    const auto d = static_cast<std::size_t>(x.shape(1));
    if (y.size() != n) {
        throw data_error("X has " + std::to_string(n) + " rows but y has " + std::to_string(y.size()) + " labels");
    }
    Dataset ds;
    ds.schema = FeatureSchema::numeric(d);
    ds.x = FeatureMatrix::dense(d);
    ds.x.reserve(n, n * d);
    std::map<std::string, LabelId> ids;
    const double* data = x.data();
    for (std::size_t i = 0; i < n; ++i) {
        ds.x.push_dense(std::span<const double>(data + i * d, d));
        auto [it, inserted] = ids.try_emplace(y[i], ds.labels.size());
        if (inserted) {
            ds.labels.push_back(y[i]);
        }
        ds.y.push_back(it->second);
    }
    ds.validate();
    return ds;
}

py::array_t<double> to_array(const Dataset& ds) {
    py::array_t<double> out({ds.size(), ds.n_features()});
    auto m = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto row = ds.row(i).to_dense();
        for (std::size_t j = 0; j < row.size(); ++j) {
            m(static_cast<py::ssize_t>(i), static_cast<py::ssize_t>(j)) = row[j];
        }
    }
    return out;
}

py::object json_to_py(const nlohmann::ordered_json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

ExperimentConfig config_from(const py::dict& settings) {
    ExperimentConfig cfg;
    for (const auto& [k, v] : settings) {
        const auto key = py::str(k).cast<std::string>();
        std::string value;
        if (py::isinstance<py::list>(v) || py::isinstance<py::tuple>(v)) {
            for (const auto& item : v) {
                value += (value.empty() ? "" : ",") + py::str(item).cast<std::string>();
            }
        } else if (py::isinstance<py::bool_>(v)) {
            value = v.cast<bool>() ? "true" : "false";
        } else {
            value = py::str(v).cast<std::string>();
        }
        apply_setting(cfg, key, value);
    }
    return cfg;
}

/// Fitted CMC or CMC-M model exposed as one Python type.
class Model {
  public:
    Model(std::variant<CmcModel, CmcmModel> m, std::vector<std::string> labels)
        : model_(std::move(m)), labels_(std::move(labels)) {}

    [[nodiscard]] std::string kind() const { return model_.index() == 0 ? "cmc" : "cmcm"; }
    [[nodiscard]] const std::vector<std::string>& labels() const { return labels_; }

    [[nodiscard]] py::dict predict_detailed(const py::array_t<double, py::array::c_style | py::array::forcecast>& x) const {
        if (x.ndim() != 2) {
            throw data_error("X must be a 2-d array");
        }
        const auto n = static_cast<std::size_t>(x.shape(0));
        const auto d = static_cast<std::size_t>(x.shape(1));
        std::vector<std::string> labels(n);
        std::vector<std::string> route(n);
        std::vector<bool> resolved(n, false);
        const double* data = x.data();
        {
            py::gil_scoped_release release;
            for (std::size_t i = 0; i < n; ++i) {
                const auto row = RowView::dense(std::span<const double>(data + i * d, d));
                if (const auto* cmc = std::get_if<CmcModel>(&model_)) {
                    const auto p = cmc->predict(row);
                    labels[i] = labels_[p.label];
                    route[i] = std::string(to_string(p.layer));
                } else {
                    const auto p = std::get<CmcmModel>(model_).predict(row);
                    labels[i] = labels_[p.label];
                    route[i] = std::string(to_string(p.branch));
                    resolved[i] = p.resolved;
                }
            }
        }
        py::dict out;
        out["labels"] = labels;
        out["route"] = route;
        if (model_.index() == 1) {
            out["resolved"] = resolved;
        }
        return out;
    }

    [[nodiscard]] std::vector<std::string> predict(
        const py::array_t<double, py::array::c_style | py::array::forcecast>& x) const {
        return predict_detailed(x)["labels"].cast<std::vector<std::string>>();
    }

  private:
    std::variant<CmcModel, CmcmModel> model_;
    std::vector<std::string> labels_;
};

Model fit_model(const Dataset& ds, const std::string& model, std::uint64_t seed,
                const std::optional<std::vector<std::string>>& majority) {
    const auto stats = majority ? class_stats(ds, *majority) : class_stats(ds);
    auto kind = model_kind_from_string(model);
    if (kind == ModelKind::automatic) {
        kind = auto_select(stats);
    }
    const auto n = default_recipe().size();
    py::gil_scoped_release release;
    if (kind == ModelKind::cmc) {
        return {fit_cmc(ds, stats, StageThresholds::defaults(n), StageThresholds::defaults(n), seed), ds.labels};
    }
    if (kind == ModelKind::cmcm) {
        return {fit_cmcm(ds, stats, CmcmThresholds::defaults(n), seed), ds.labels};
    }
    throw config_error("fit supports the cmc, cmcm and auto models; use run_experiment for baselines");
}

ConfusionMatrix confusion_from(const std::vector<LabelId>& truth, const std::vector<LabelId>& pred,
                               std::optional<std::size_t> k) {
    std::size_t n = k.value_or(0);
    if (!k) {
        for (const auto v : truth) {
            n = std::max(n, v + 1);
        }
        for (const auto v : pred) {
            n = std::max(n, v + 1);
        }
    }
    return confusion(truth, pred, n);
}

}  // namespace

PYBIND11_MODULE(_cmc_ensemble, m) {
    m.doc() = "Co-multistage ensembles for imbalanced multiclass classification";

    static py::exception<config_error> config_exc(m, "ConfigError", PyExc_ValueError);
    static py::exception<data_error> data_exc(m, "DataError", PyExc_ValueError);
    static py::exception<training_error> training_exc(m, "TrainingError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) {
                std::rethrow_exception(p);
            }
        } catch (const config_error& e) {
            py::set_error(config_exc, e.what());
        } catch (const data_error& e) {
            py::set_error(data_exc, e.what());
        } catch (const training_error& e) {
            py::set_error(training_exc, e.what());
        }
    });

    py::class_<ClassStats>(m, "ClassStats")
        .def_readonly("labels", &ClassStats::labels)
        .def_readonly("counts", &ClassStats::counts)
        .def_readonly("total", &ClassStats::total)
        .def_readonly("balance_point", &ClassStats::balance_point)
        .def_property_readonly("majority",
                               [](const ClassStats& s) {
                                   std::vector<std::string> out;
                                   for (const auto c : s.majority) {
                                       out.push_back(s.labels[c]);
                                   }
                                   return out;
                               })
        .def_property_readonly("minority",
                               [](const ClassStats& s) {
                                   std::vector<std::string> out;
                                   for (const auto c : s.minority) {
                                       out.push_back(s.labels[c]);
                                   }
                                   return out;
                               })
        .def("suggested_model", [](const ClassStats& s) { return std::string(to_string(auto_select(s))); });

    py::class_<Dataset>(m, "Dataset")
        .def_static(
            "load",
            [](const std::filesystem::path& path, const std::string& format, const std::string& label,
               const std::filesystem::path& labels, const std::filesystem::path& schema) {
                return load_dataset({path, data_format_from_string(format), label, labels, schema});
            },
            py::arg("path"), py::arg("format") = "csv", py::arg("label") = "", py::arg("labels") = "",
            py::arg("schema") = "")
        .def_static("from_arrays", &from_arrays, py::arg("X"), py::arg("y"))
        .def("__len__", &Dataset::size)
        .def_property_readonly("n_features", &Dataset::n_features)
        .def_readonly("labels", &Dataset::labels)
        .def_property_readonly("y",
                               [](const Dataset& ds) {
                                   std::vector<std::string> out;
                                   for (const auto l : ds.y) {
                                       out.push_back(ds.labels[l]);
                                   }
                                   return out;
                               })
        .def_property_readonly("X", &to_array)
        .def(
            "class_stats",
            [](const Dataset& ds, const std::optional<std::vector<std::string>>& majority) {
                return majority ? class_stats(ds, *majority) : class_stats(ds);
            },
            py::arg("majority") = py::none())
        .def(
            "split",
            [](const Dataset& ds, double fraction, std::uint64_t seed) { return split(ds, fraction, seed); },
            py::arg("fraction") = 0.8, py::arg("seed") = 1)
        .def(
            "smote",
            [](const Dataset& ds, double rate, std::size_t k, std::uint64_t seed) {
                SmoteConfig cfg;
                cfg.rate = rate;
                cfg.k_neighbors = k;
                cfg.seed = seed;
                return smote(ds, class_stats(ds), cfg);
            },
            py::arg("rate") = 1.0, py::arg("k") = 5, py::arg("seed") = 0)
        .def(
            "undersample",
            [](const Dataset& ds, double fraction, std::uint64_t seed) {
                UndersampleConfig cfg;
                cfg.target_fraction = fraction;
                cfg.seed = seed;
                return undersample(ds, cfg);
            },
            py::arg("fraction") = 0.9, py::arg("seed") = 0);

    py::class_<Model>(m, "Model")
        .def_property_readonly("kind", &Model::kind)
        .def_property_readonly("labels", &Model::labels)
        .def("predict", &Model::predict, py::arg("X"))
        .def("predict_detailed", &Model::predict_detailed, py::arg("X"));

    m.def("fit", &fit_model, py::arg("dataset"), py::arg("model") = "auto", py::arg("seed") = 1,
          py::arg("majority") = py::none(), "Fit a CMC or CMC-M model on a dataset.");

    m.def(
        "run_experiment",
        [](const py::dict& settings, bool timing) {
            const auto cfg = config_from(settings);
            MultiRunResult r;
            {
                py::gil_scoped_release release;
                r = run_experiment(cfg);
            }
            return json_to_py(to_json(r, timing));
        },
        py::arg("settings"), py::arg("timing") = false,
        "Run a benchmark experiment; settings use the same keys as the config file.");

    m.def(
        "macro_f1",
        [](const std::vector<LabelId>& t, const std::vector<LabelId>& p, std::optional<std::size_t> k) {
            return macro_f1(confusion_from(t, p, k));
        },
        py::arg("truth"), py::arg("pred"), py::arg("k") = py::none());
    m.def(
        "g_mean",
        [](const std::vector<LabelId>& t, const std::vector<LabelId>& p, std::optional<std::size_t> k) {
            return g_mean(confusion_from(t, p, k));
        },
        py::arg("truth"), py::arg("pred"), py::arg("k") = py::none());
    m.def(
        "sg_mean",
        [](const std::vector<LabelId>& t, const std::vector<LabelId>& p, double delta, const std::string& variant,
           std::optional<std::size_t> k) {
            return sg_mean(confusion_from(t, p, k), delta, sg_mean_variant_from_string(variant));
        },
        py::arg("truth"), py::arg("pred"), py::arg("delta") = 0.001, py::arg("variant") = "printed",
        py::arg("k") = py::none());
}
