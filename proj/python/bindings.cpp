#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "mudet/channel.hpp"
#include "mudet/coding.hpp"
#include "mudet/constellation.hpp"
#include "mudet/detectors.hpp"
#include "mudet/estimation.hpp"
#include "mudet/harness.hpp"
#include "mudet/idd.hpp"
#include "mudet/receiver.hpp"

namespace py = pybind11;
using namespace mudet;

namespace {

void bind_core(py::module_& m)
{
    py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_RuntimeError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

    py::class_<Constellation>(m, "Constellation")
        .def_static("qpsk", &Constellation::qpsk)
        .def_static("qam16", &Constellation::qam16)
        .def_static("from_name", &Constellation::from_name)
        .def_property_readonly("name", &Constellation::name)
        .def_property_readonly("bits_per_symbol", &Constellation::bits_per_symbol)
        .def_property_readonly("size", &Constellation::size)
        .def_property_readonly("min_spacing", &Constellation::min_spacing)
        .def_property_readonly("points", [](const Constellation& c) {
            return std::vector<Complex>(c.points().begin(), c.points().end());
        })
        .def("bit", &Constellation::bit)
        .def("map_bits", [](const Constellation& c, const std::vector<std::uint8_t>& b) { return c.map_bits(b); })
        .def("map_bits_index",
             [](const Constellation& c, const std::vector<std::uint8_t>& b) { return c.map_bits_index(b); })
        .def("demap", &Constellation::demap)
        .def("slice_index", &Constellation::slice_index)
        .def("slice", &Constellation::slice)
        .def("nearest_distance", &Constellation::nearest_distance);

    py::enum_<RegionCase>(m, "RegionCase")
        .value("InsideSquare", RegionCase::InsideSquare)
        .value("OutsideSquare", RegionCase::OutsideSquare)
        .value("InnerTier", RegionCase::InnerTier)
        .value("OuterTier", RegionCase::OuterTier);

    py::class_<ReliabilityVerdict>(m, "ReliabilityVerdict")
        .def_readonly("reliable", &ReliabilityVerdict::reliable)
        .def_readonly("case_tag", &ReliabilityVerdict::case_tag)
        .def_readonly("nearest_distance", &ReliabilityVerdict::nearest_distance);

    m.def("check_reliability", &check_reliability, py::arg("u"), py::arg("constellation"), py::arg("d_th"));
    m.def("build_candidate_list", &build_candidate_list, py::arg("u"), py::arg("verdict"),
          py::arg("constellation"), py::arg("tau_max"));

    m.def("gen_block_fading",
          [](std::size_t k, std::size_t nr, std::size_t frames, std::uint64_t seed) {
              return gen_block_fading(k, nr, frames, seed).gains;
          },
          py::arg("users"), py::arg("rx"), py::arg("frames"), py::arg("seed"));
    m.def("gen_jakes",
          [](std::size_t k, std::size_t nr, std::size_t n, double fdt, std::uint64_t seed) {
              return gen_jakes(k, nr, n, fdt, seed).gains;
          },
          py::arg("users"), py::arg("rx"), py::arg("symbols"), py::arg("fdt"), py::arg("seed"));
    m.def("transmit",
          [](const CMatrix& h, const CVector& s, double sigma_v2, std::uint64_t seed) {
              Rng rng(seed);
              return transmit(h, s, NoiseSpec(sigma_v2), rng);
          },
          py::arg("h"), py::arg("s"), py::arg("sigma_v2"), py::arg("seed"));
    m.def("sigma_v2_from_ebn0", &sigma_v2_from_ebn0, py::arg("ebn0_db"), py::arg("rx"), py::arg("code_rate"),
          py::arg("constellation_size"));
}

void bind_estimation(py::module_& m)
{
    py::class_<RlsFilter>(m, "RlsFilter")
        .def(py::init<std::size_t, double, double>(), py::arg("dim"), py::arg("lam"), py::arg("delta") = 0.01)
        .def_property("weights", &RlsFilter::weights, &RlsFilter::set_weights)
        .def_property_readonly("inv_corr", &RlsFilter::inv_corr)
        .def("output", [](const RlsFilter& f, const CVector& x) { return f.output(x); })
        .def("update", [](RlsFilter& f, const CVector& x, Complex ref) { return f.update(x, ref); });

    py::enum_<FeedbackMode>(m, "FeedbackMode")
        .value("Successive", FeedbackMode::Successive)
        .value("Parallel", FeedbackMode::Parallel);

    py::class_<ReceiverState>(m, "ReceiverState")
        .def_readwrite("filter", &ReceiverState::filter)
        .def_readonly("forward_len", &ReceiverState::forward_len)
        .def_readonly("backward_len", &ReceiverState::backward_len);

    m.def("init_receiver", &init_receiver, py::arg("users"), py::arg("rx"), py::arg("mode"), py::arg("lam") = 0.998,
          py::arg("delta") = 0.01);

    py::class_<ChannelEstimator>(m, "ChannelEstimator")
        .def(py::init<std::size_t, std::size_t, double, double>(), py::arg("rx"), py::arg("users"),
             py::arg("lam") = 0.998, py::arg("delta_c") = 0.01)
        .def("update", [](ChannelEstimator& c, const CVector& r, const CVector& s) { return c.update(r, s); })
        .def_property_readonly("estimate", &ChannelEstimator::estimate);
}

void bind_detectors(py::module_& m)
{
    py::class_<DetectionResult>(m, "DetectionResult")
        .def_readonly("decision_indices", &DetectionResult::decision_indices)
        .def_readonly("decisions", &DetectionResult::decisions)
        .def_readonly("soft", &DetectionResult::soft)
        .def_readonly("gamma", &DetectionResult::gamma)
        .def_readonly("op_count", &DetectionResult::op_count)
        .def_readonly("candidate_lists", &DetectionResult::candidate_lists);

    py::class_<PdfccOptions>(m, "PdfccOptions")
        .def(py::init<>())
        .def_readwrite("d_th", &PdfccOptions::d_th)
        .def_readwrite("tau_max", &PdfccOptions::tau_max)
        .def_readwrite("gamma_cap", &PdfccOptions::gamma_cap)
        .def_readwrite("recancel", &PdfccOptions::recancel);

    m.def("residual_metric",
          [](const CVector& r, const CMatrix& h, const std::vector<std::size_t>& idx, const Constellation& c) {
              return residual_metric(r, h, idx, c);
          });
    m.def("ml_detect", &ml_detect, py::arg("r"), py::arg("h"), py::arg("constellation"));
    m.def("compute_order", &compute_order);
    m.def("sdf_detect",
          [](const CVector& r, const std::vector<ReceiverState>& s, const DetectionOrder& o, const Constellation& c) {
              return sdf_detect(r, s, o, c);
          },
          py::arg("r"), py::arg("states"), py::arg("order"), py::arg("constellation"));
    m.def("pdf_detect",
          [](const CVector& r, const std::vector<ReceiverState>& s, const Constellation& c,
             const std::vector<ReceiverState>& stage1) { return pdf_detect(r, s, c, stage1); },
          py::arg("r"), py::arg("states"), py::arg("constellation"), py::arg("stage1") = std::vector<ReceiverState>{});
    m.def("pdfcc_detect",
          [](const CVector& r, const std::vector<ReceiverState>& s, const CMatrix& h, const Constellation& c,
             const PdfccOptions& o, const std::vector<ReceiverState>& stage1) {
              return pdfcc_detect(r, s, h, c, o, stage1);
          },
          py::arg("r"), py::arg("states"), py::arg("h_est"), py::arg("constellation"), py::arg("options") = PdfccOptions{},
          py::arg("stage1") = std::vector<ReceiverState>{});
}

void bind_coding(py::module_& m)
{
    py::enum_<BcjrMetric>(m, "BcjrMetric").value("MaxLog", BcjrMetric::MaxLog).value("LogMap", BcjrMetric::LogMap);
    m.def("conv_encode", [](const std::vector<std::uint8_t>& msg) { return conv_encode(msg); });
    m.def("bcjr_decode",
          [](const std::vector<double>& ch, const std::vector<double>& prior, BcjrMetric metric) {
              const BcjrOutput o = bcjr_decode(ch, prior, metric);
              py::dict d;
              d["coded_app"] = o.coded_app;
              d["coded_extrinsic"] = o.coded_extrinsic;
              d["message_app"] = o.message_app;
              d["message_extrinsic"] = o.message_extrinsic;
              return d;
          },
          py::arg("channel"), py::arg("message_prior") = std::vector<double>{}, py::arg("metric") = BcjrMetric::MaxLog);
    py::class_<Interleaver>(m, "Interleaver")
        .def(py::init<std::size_t, std::uint64_t>(), py::arg("length"), py::arg("seed"))
        .def_property_readonly("permutation", [](const Interleaver& il) {
            return std::vector<std::size_t>(il.permutation().begin(), il.permutation().end());
        })
        .def("interleave", [](const Interleaver& il, const std::vector<double>& x) { return il.interleave<double>(x); })
        .def("deinterleave",
             [](const Interleaver& il, const std::vector<double>& x) { return il.deinterleave<double>(x); });

    m.def("bit_prob_from_llr", &bit_prob_from_llr, py::arg("llr"), py::arg("b_bar"));
    m.def("symbol_prob",
          [](const std::vector<double>& l, const Constellation& c, std::size_t q) { return symbol_prob(l, c, q); });
    m.def("soft_detect_llr",
          [](const CVector& r, const CMatrix& h, const std::vector<std::vector<std::size_t>>& lists,
             const std::vector<double>& prior, double sigma_v2, const Constellation& c) {
              return soft_detect_llr(r, h, lists, prior, sigma_v2, c).extrinsic;
          },
          py::arg("r"), py::arg("h"), py::arg("lists"), py::arg("prior_llrs"), py::arg("sigma_v2"),
          py::arg("constellation"));
}

void bind_harness(py::module_& m)
{
    py::enum_<DetectorKind>(m, "DetectorKind")
        .value("Ml", DetectorKind::Ml)
        .value("Sdf", DetectorKind::Sdf)
        .value("Pdf", DetectorKind::Pdf)
        .value("Pdfcc", DetectorKind::Pdfcc);
    py::enum_<FadingModel>(m, "FadingModel")
        .value("BlockFading", FadingModel::BlockFading)
        .value("Jakes", FadingModel::Jakes);
    py::enum_<Stage1Source>(m, "Stage1Source")
        .value("Forward", Stage1Source::Forward)
        .value("Linear", Stage1Source::Linear)
        .value("Successive", Stage1Source::Successive);

    py::class_<ExperimentConfig>(m, "ExperimentConfig")
        .def(py::init<>())
        .def_readwrite("detector", &ExperimentConfig::detector)
        .def_readwrite("users", &ExperimentConfig::users)
        .def_readwrite("rx", &ExperimentConfig::rx)
        .def_readwrite("modulation", &ExperimentConfig::modulation)
        .def_readwrite("channel", &ExperimentConfig::channel)
        .def_readwrite("fdt", &ExperimentConfig::fdt)
        .def_readwrite("ebn0_db", &ExperimentConfig::ebn0_db)
        .def_readwrite("frames", &ExperimentConfig::frames)
        .def_readwrite("frame_length", &ExperimentConfig::frame_length)
        .def_readwrite("pilots", &ExperimentConfig::pilots)
        .def_readwrite("lam", &ExperimentConfig::lambda)
        .def_readwrite("delta", &ExperimentConfig::delta)
        .def_readwrite("d_th", &ExperimentConfig::d_th)
        .def_readwrite("tau_max", &ExperimentConfig::tau_max)
        .def_readwrite("gamma_cap", &ExperimentConfig::gamma_cap)
        .def_readwrite("recancel", &ExperimentConfig::recancel)
        .def_readwrite("stage1", &ExperimentConfig::stage1)
        .def_readwrite("coded", &ExperimentConfig::coded)
        .def_readwrite("block_bits", &ExperimentConfig::block_bits)
        .def_readwrite("turbo_iters", &ExperimentConfig::turbo_iters)
        .def_readwrite("seed", &ExperimentConfig::seed)
        .def_readwrite("threads", &ExperimentConfig::threads)
        .def("validate", &ExperimentConfig::validate);

    py::class_<IterationStats>(m, "IterationStats")
        .def_property_readonly("coded_ber", &IterationStats::coded_ber)
        .def_property_readonly("message_ber", &IterationStats::message_ber)
        .def_readonly("mean_gamma", &IterationStats::mean_gamma);

    py::class_<PointResult>(m, "PointResult")
        .def_readonly("ebn0_db", &PointResult::ebn0_db)
        .def_readonly("bit_errors", &PointResult::bit_errors)
        .def_readonly("bits", &PointResult::bits)
        .def_readonly("ber", &PointResult::ber)
        .def_readonly("ber_ci_lo", &PointResult::ber_ci_lo)
        .def_readonly("ber_ci_hi", &PointResult::ber_ci_hi)
        .def_readonly("mean_gamma", &PointResult::mean_gamma)
        .def_readonly("mean_ops", &PointResult::mean_ops)
        .def_readonly("trials", &PointResult::trials)
        .def_readonly("iterations", &PointResult::iterations);

    py::class_<ResultRecord>(m, "ResultRecord")
        .def_readonly("config", &ResultRecord::config)
        .def_readonly("points", &ResultRecord::points)
        .def("to_csv", [](const ResultRecord& r) {
            std::ostringstream os;
            write_csv(os, r);
            return os.str();
        });

    py::class_<MseTrace>(m, "MseTrace")
        .def_readonly("mse", &MseTrace::mse)
        .def_readonly("run_tail", &MseTrace::run_tail)
        .def_readonly("runs", &MseTrace::runs);

    m.def("run_uncoded_sweep", &run_uncoded_sweep, py::call_guard<py::gil_scoped_release>());
    m.def("run_coded_sweep", &run_coded_sweep, py::call_guard<py::gil_scoped_release>());
    m.def("run_mse_trace", &run_mse_trace, py::arg("config"), py::arg("tail_start"),
          py::call_guard<py::gil_scoped_release>());
    m.def("wilson_interval", &wilson_interval, py::arg("errors"), py::arg("n"), py::arg("z") = 1.959963984540054);
}

}  // namespace

PYBIND11_MODULE(_mudet, m)
{
    m.doc() = "Adaptive decision-feedback multiuser MIMO detection";
    m.attr("__version__") = "0.1.0";
    bind_core(m);
    bind_estimation(m);
    bind_detectors(m);
    bind_coding(m);
    bind_harness(m);
}
