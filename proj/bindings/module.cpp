#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "mtft/pipeline.hpp"

namespace py = pybind11;
using namespace mtft;

PYBIND11_MODULE(_core, m) {
  m.doc() = "multi-target filtering and tracking core";

  py::class_<TargetTuple>(m, "TargetTuple")
      .def(py::init<>())
      .def_readwrite("mean", &TargetTuple::mean)
      .def_readwrite("cov", &TargetTuple::cov)
      .def_readwrite("weight", &TargetTuple::weight)
      .def_readwrite("label", &TargetTuple::label)
      .def_readwrite("age", &TargetTuple::age)
      .def_readwrite("motion", &TargetTuple::motion);

  py::class_<TargetSet>(m, "TargetSet")
      .def(py::init<>())
      .def_readwrite("targets", &TargetSet::targets)
      .def_readwrite("frame", &TargetSet::frame)
      .def("__len__", [](const TargetSet& s) { return s.size(); });

  py::class_<GridSpec>(m, "GridSpec")
      .def(py::init<>())
      .def_readwrite("origin_x", &GridSpec::origin_x)
      .def_readwrite("origin_y", &GridSpec::origin_y)
      .def_readwrite("extent_x", &GridSpec::extent_x)
      .def_readwrite("extent_y", &GridSpec::extent_y)
      .def_readwrite("ts", &GridSpec::ts)
      .def("rows", &GridSpec::rows)
      .def("cols", &GridSpec::cols);

  py::class_<PhdMap>(m, "PhdMap")
      .def(py::init<>())
      .def_readwrite("grid", &PhdMap::grid)
      .def_readwrite("values", &PhdMap::values)
      .def("integral", &PhdMap::integral);

  py::class_<Peak>(m, "Peak")
      .def_readonly("pos", &Peak::pos)
      .def_readonly("value", &Peak::value)
      .def_readonly("mass", &Peak::mass);

  py::class_<PeakList>(m, "PeakList")
      .def_readonly("peaks", &PeakList::peaks)
      .def_readonly("underfull", &PeakList::underfull);

  py::class_<MeasurementSet>(m, "MeasurementSet")
      .def(py::init<>())
      .def_readwrite("boxes", &MeasurementSet::boxes)
      .def_readwrite("frame", &MeasurementSet::frame);

  py::class_<BirthModel>(m, "BirthModel")
      .def(py::init<>())
      .def_readwrite("cov", &BirthModel::cov)
      .def_readwrite("weight", &BirthModel::weight)
      .def_readwrite("age", &BirthModel::age)
      .def_readwrite("motion", &BirthModel::motion);

  py::class_<UpdateConfig>(m, "UpdateConfig")
      .def(py::init<>())
      .def_readwrite("H", &UpdateConfig::H)
      .def_readwrite("R", &UpdateConfig::R)
      .def_readwrite("p_d", &UpdateConfig::p_d)
      .def_readwrite("clutter_rate", &UpdateConfig::clutter_rate)
      .def_readwrite("area", &UpdateConfig::area)
      .def_readwrite("w_span", &UpdateConfig::w_span)
      .def_readwrite("h_span", &UpdateConfig::h_span)
      .def_readwrite("omega_t", &UpdateConfig::omega_t)
      .def_readwrite("birth", &UpdateConfig::birth);

  py::class_<AssocConfig>(m, "AssocConfig")
      .def(py::init<>())
      .def_readwrite("a_t", &AssocConfig::a_t)
      .def_readwrite("a_birth", &AssocConfig::a_birth)
      .def_readwrite("a_at", &AssocConfig::a_at)
      .def_readwrite("a_am", &AssocConfig::a_am)
      .def_readwrite("forbid_nonnegative", &AssocConfig::forbid_nonnegative)
      .def_readwrite("coast_decaying", &AssocConfig::coast_decaying);

  py::class_<OspaConfig>(m, "OspaConfig")
      .def(py::init<>())
      .def_readwrite("c", &OspaConfig::c)
      .def_readwrite("p", &OspaConfig::p);

  py::class_<OspaResult>(m, "OspaResult")
      .def_readonly("overall", &OspaResult::overall)
      .def_readonly("loc", &OspaResult::loc)
      .def_readonly("card", &OspaResult::card);

  py::class_<MotScores>(m, "MotScores")
      .def_readonly("mota", &MotScores::mota)
      .def_readonly("motal", &MotScores::motal)
      .def_readonly("recall", &MotScores::recall)
      .def_readonly("precision", &MotScores::precision)
      .def_readonly("tp", &MotScores::tp)
      .def_readonly("fp", &MotScores::fp)
      .def_readonly("fn", &MotScores::fn)
      .def_readonly("id_switches", &MotScores::id_switches);

  py::enum_<LossKind>(m, "LossKind")
      .value("KL", LossKind::kKL)
      .value("JSD", LossKind::kJSD);

  py::class_<ConvLstmParams>(m, "ConvLstmParams")
      .def_readonly("filters", &ConvLstmParams::filters)
      .def("param_count", &ConvLstmParams::param_count)
      .def("flatten", &ConvLstmParams::flatten)
      .def("save", [](const ConvLstmParams& p) {
        std::ostringstream os;
        save_params(os, p);
        return os.str();
      })
      .def_static("load", [](const std::string& blob) {
        std::istringstream is(blob);
        return load_params(is);
      });

  py::class_<AdamState>(m, "AdamState").def_readonly("t", &AdamState::t);

  py::class_<PddBatch>(m, "PddBatch")
      .def(py::init<>())
      .def_readwrite("grid", &PddBatch::grid)
      .def_readwrite("capacity", &PddBatch::capacity)
      .def("push", &PddBatch::push)
      .def("full", &PddBatch::full)
      .def("__len__", [](const PddBatch& b) { return b.maps.size(); });

  py::class_<TrainRecord>(m, "TrainRecord")
      .def_readonly("epoch_loss", &TrainRecord::epoch_loss);

  py::class_<ScenarioSpec>(m, "ScenarioSpec")
      .def(py::init<>())
      .def_readwrite("extent_x", &ScenarioSpec::extent_x)
      .def_readwrite("extent_y", &ScenarioSpec::extent_y)
      .def_readwrite("frames", &ScenarioSpec::frames)
      .def_readwrite("p_d", &ScenarioSpec::p_d)
      .def_readwrite("clutter_rate", &ScenarioSpec::clutter_rate)
      .def_readwrite("noise_sigma", &ScenarioSpec::noise_sigma)
      .def_readwrite("seed", &ScenarioSpec::seed)
      .def_readwrite("tracks", &ScenarioSpec::tracks);

  py::class_<TrackSpec>(m, "TrackSpec")
      .def(py::init<>())
      .def_readwrite("birth", &TrackSpec::birth)
      .def_readwrite("death", &TrackSpec::death)
      .def_readwrite("cx", &TrackSpec::cx)
      .def_readwrite("cy", &TrackSpec::cy)
      .def_readwrite("w", &TrackSpec::w)
      .def_readwrite("h", &TrackSpec::h)
      .def_readwrite("vx", &TrackSpec::vx)
      .def_readwrite("vy", &TrackSpec::vy)
      .def_readwrite("turn", &TrackSpec::turn);

  py::class_<Scenario>(m, "Scenario")
      .def_readonly("gt", &Scenario::gt)
      .def_readonly("detections", &Scenario::detections);

  py::class_<PipelineConfig>(m, "PipelineConfig")
      .def(py::init<>())
      .def_readwrite("sampling_period", &PipelineConfig::sampling_period)
      .def_readwrite("extent_x", &PipelineConfig::extent_x)
      .def_readwrite("extent_y", &PipelineConfig::extent_y)
      .def_readwrite("border", &PipelineConfig::border)
      .def_readwrite("batch_size", &PipelineConfig::batch_size)
      .def_readwrite("epochs", &PipelineConfig::epochs)
      .def_readwrite("filters", &PipelineConfig::filters)
      .def_readwrite("loss", &PipelineConfig::loss)
      .def_readwrite("relu_output", &PipelineConfig::relu_output)
      .def_readwrite("p_d", &PipelineConfig::p_d)
      .def_readwrite("clutter_rate", &PipelineConfig::clutter_rate)
      .def_readwrite("omega_t", &PipelineConfig::omega_t)
      .def_readwrite("a_t", &PipelineConfig::a_t)
      .def_readwrite("a_birth", &PipelineConfig::a_birth)
      .def_readwrite("a_at", &PipelineConfig::a_at)
      .def_readwrite("a_am", &PipelineConfig::a_am)
      .def_readwrite("seed", &PipelineConfig::seed);

  py::class_<RunResult>(m, "RunResult")
      .def_readonly("tracks", &RunResult::tracks)
      .def_readonly("has_gt", &RunResult::has_gt)
      .def_readonly("mot", &RunResult::mot)
      .def_readonly("ospa_mean", &RunResult::ospa_mean);

  py::class_<SequenceData>(m, "SequenceData")
      .def_readonly("detections", &SequenceData::detections)
      .def_readonly("first_frame", &SequenceData::first_frame)
      .def_readonly("last_frame", &SequenceData::last_frame)
      .def_readonly("extent_x", &SequenceData::extent_x)
      .def_readonly("extent_y", &SequenceData::extent_y);

  m.def("gm_eval", &gm_eval, py::arg("set"), py::arg("point"));
  m.def("gm_integral", &gm_integral);
  m.def("prune_merge", &prune_merge, py::arg("set"), py::arg("truncate_thresh"),
        py::arg("merge_dist"), py::arg("j_max"));
  m.def("render_phd", &render_phd);
  m.def("pdd", &pdd);
  m.def("postprocess_prediction", &postprocess_prediction);
  m.def("extract_peaks", &extract_peaks, py::arg("map"), py::arg("count"),
        py::arg("min_separation"));
  m.def("assign_covariances", &assign_covariances);
  m.def(
      "hungarian",
      [](const Eigen::MatrixXd& cost, bool forbid) {
        const Assignment a = hungarian(cost, forbid);
        return py::make_tuple(a.row_to_col, a.col_to_row, a.total_cost);
      },
      py::arg("cost"), py::arg("forbid_nonnegative") = false);
  m.def("iou", &iou);
  m.def("distance_matrix", &distance_matrix);
  m.def("age_update", &age_update);
  m.def("extract_mature", &extract_mature);
  m.def("clutter_intensity", &clutter_intensity);
  m.def("append_births", &append_births);
  m.def("kalman_update", &kalman_update);
  m.def("select_by_weight", &select_by_weight);
  m.def("ospa", &ospa, py::arg("a"), py::arg("b"), py::arg("cfg") = OspaConfig{});
  m.def("clear_mot", &clear_mot, py::arg("tracks"), py::arg("gt"),
        py::arg("iou_thresh") = 0.5);
  m.def("make_params", &make_params, py::arg("filters"), py::arg("seed"));
  m.def("zero_params", &zero_params);
  m.def("predict", &predict, py::arg("params"), py::arg("batch"),
        py::arg("relu_output") = true);
  m.def("kl_loss", &kl_loss);
  m.def("jsd_loss", &jsd_loss);
  m.def("make_adam", [](const ConvLstmParams& p) { return make_adam(p); });
  m.def("train_online", &train_online, py::arg("params"), py::arg("opt"),
        py::arg("inputs"), py::arg("target"), py::arg("epochs"), py::arg("loss"),
        py::arg("relu_output") = true, py::arg("l2_kernel") = 1e-4);
  m.def("gen_scenario", &gen_scenario);
  m.def("parse_detections", &parse_detections, py::arg("det_file"),
        py::arg("conf_thresh") = 0.0);
  m.def("parse_ground_truth", &parse_ground_truth);
  m.def("parse_config", &parse_config);
  m.def(
      "run",
      [](const PipelineConfig& cfg, const SequenceData& seq,
         const std::optional<Timeline>& gt) { return run(cfg, seq, gt); },
      py::arg("cfg"), py::arg("seq"), py::arg("gt") = std::nullopt);
}
