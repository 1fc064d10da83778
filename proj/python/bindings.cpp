#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <span>
#include <string>

#include "sdlab/error.hpp"
#include "sdlab/lsfs.hpp"
#include "sdlab/metrics.hpp"
#include "sdlab/nand_medium.hpp"
#include "sdlab/secdel.hpp"
#include "sdlab/simulation.hpp"
#include "sdlab/workload.hpp"

namespace py = pybind11;
using namespace sdlab;

namespace {

PyObject* g_error = nullptr;

nand::Bytes to_bytes(const py::bytes& b) {
  const std::string s = b;
  return {s.begin(), s.end()};
}

py::bytes from_span(std::span<const nand::Byte> s) {
  return py::bytes(reinterpret_cast<const char*>(s.data()), s.size());
}

py::bytes from_bytes(const nand::Bytes& b) { return from_span(b); }

}  // namespace

PYBIND11_MODULE(_sdlab, m) {
  m.doc() = "Simulated NAND flash, a log-structured file system and secure-deletion mechanisms";

  g_error = PyErr_NewException("sdlab.Error", PyExc_RuntimeError, nullptr);
  m.add_object("Error", py::handle(g_error));
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = py::reinterpret_steal<py::object>(PyObject_CallFunction(g_error, "s", e.what()));
      inst.attr("code") = std::string(errc_name(e.code()));
      PyErr_SetObject(g_error, inst.ptr());
    }
  });

  // ---- medium
  py::class_<nand::MediumGeometry>(m, "MediumGeometry")
      .def(py::init([](std::uint64_t chunk_size, std::uint64_t chunks_per_block, std::uint64_t block_count,
                       std::uint64_t erasure_limit, bool multi) {
             nand::MediumGeometry g{chunk_size, chunks_per_block, block_count, erasure_limit, multi};
             g.validate();
             return g;
           }),
           py::arg("chunk_size_bytes") = 2048, py::arg("chunks_per_block") = 64, py::arg("block_count") = 64,
           py::arg("erasure_limit") = 10000, py::arg("multiple_programming_allowed") = true)
      .def_readonly("chunk_size_bytes", &nand::MediumGeometry::chunk_size_bytes)
      .def_readonly("chunks_per_block", &nand::MediumGeometry::chunks_per_block)
      .def_readonly("block_count", &nand::MediumGeometry::block_count)
      .def_readonly("erasure_limit", &nand::MediumGeometry::erasure_limit)
      .def_readonly("multiple_programming_allowed", &nand::MediumGeometry::multiple_programming_allowed)
      .def("__repr__", [](const nand::MediumGeometry& g) {
        return "MediumGeometry(" + std::to_string(g.chunk_size_bytes) + ", " + std::to_string(g.chunks_per_block) +
               ", " + std::to_string(g.block_count) + ")";
      });

  py::class_<nand::ScanHit>(m, "ScanHit")
      .def_readonly("block", &nand::ScanHit::block)
      .def_readonly("chunk", &nand::ScanHit::chunk)
      .def_readonly("offset", &nand::ScanHit::offset)
      .def("__repr__", [](const nand::ScanHit& h) {
        return "ScanHit(" + std::to_string(h.block) + ", " + std::to_string(h.chunk) + ", " +
               std::to_string(h.offset) + ")";
      });

  py::class_<nand::Medium>(m, "Medium")
      .def(py::init<nand::MediumGeometry>(), py::arg("geometry"))
      .def_property_readonly("geometry", &nand::Medium::geometry)
      .def(
          "program_chunk",
          [](nand::Medium& md, nand::BlockIndex b, nand::ChunkIndex c, const py::bytes& payload,
             const py::bytes& spare) { md.program_chunk(b, c, to_bytes(payload), to_bytes(spare)); },
          py::arg("block"), py::arg("chunk"), py::arg("payload"), py::arg("spare"))
      .def(
          "erase_block", [](nand::Medium& md, nand::BlockIndex b) { return md.erase_block(b).erase_count; },
          py::arg("block"), "Erases a block and returns its new erase count.")
      .def(
          "read_chunk",
          [](const nand::Medium& md, nand::BlockIndex b, nand::ChunkIndex c) {
            const auto v = md.read_chunk(b, c);
            return py::make_tuple(from_span(v.payload), from_span(v.spare));
          },
          py::arg("block"), py::arg("chunk"))
      .def("erase_count", [](const nand::Medium& md, nand::BlockIndex b) { return md.block_view(b).erase_count; })
      .def("is_bad", &nand::Medium::is_bad)
      .def(
          "raw_scan", [](const nand::Medium& md, const py::bytes& p) {
            const auto pattern = to_bytes(p);
            return md.raw_scan(std::span<const nand::Byte>(pattern));
          },
          py::arg("pattern"))
      .def("total_erasures", [](const nand::Medium& md) { return md.wear_summary().total_erasures; })
      .def("save", &nand::Medium::save_file, py::arg("path"))
      .def_static("load", &nand::Medium::load_file, py::arg("path"));

  // ---- file system
  py::class_<fs::FsConfig>(m, "FsConfig")
      .def(py::init([](std::uint32_t reserve, std::uint32_t budget, double threshold, bool zero) {
             return fs::FsConfig{reserve, budget, threshold, zero};
           }),
           py::arg("reserve_blocks") = 5, py::arg("passive_gc_copy_budget") = 4,
           py::arg("passive_gc_dirtiness_threshold") = 0.5, py::arg("zero_overwrite_enabled") = false)
      .def_readwrite("reserve_blocks", &fs::FsConfig::reserve_blocks)
      .def_readwrite("passive_gc_copy_budget", &fs::FsConfig::passive_gc_copy_budget)
      .def_readwrite("passive_gc_dirtiness_threshold", &fs::FsConfig::passive_gc_dirtiness_threshold)
      .def_readwrite("zero_overwrite_enabled", &fs::FsConfig::zero_overwrite_enabled);

  py::class_<fs::FreeSpace>(m, "FreeSpace")
      .def_readonly("free_chunks", &fs::FreeSpace::free_chunks)
      .def_readonly("empty_blocks", &fs::FreeSpace::empty_blocks)
      .def_readonly("deleted_chunks", &fs::FreeSpace::deleted_chunks)
      .def_readonly("erased_chunks", &fs::FreeSpace::erased_chunks);

  py::enum_<fs::GcMode>(m, "GcMode").value("Passive", fs::GcMode::Passive).value("Aggressive", fs::GcMode::Aggressive);

  py::class_<fs::FileSystem>(m, "FileSystem")
      .def(py::init<nand::MediumGeometry, fs::FsConfig>(), py::arg("geometry"), py::arg("config") = fs::FsConfig{})
      .def("create_file", &fs::FileSystem::create_file, py::arg("name"), py::arg("owner") = 0,
           py::arg("junk") = false)
      .def(
          "write_file",
          [](fs::FileSystem& f, ObjectId id, std::uint64_t offset, const py::bytes& data) {
            return f.write_file(id, offset, to_bytes(data));
          },
          py::arg("id"), py::arg("offset"), py::arg("data"))
      .def(
          "read_file", [](const fs::FileSystem& f, ObjectId id) { return from_bytes(f.read_file(id)); },
          py::arg("id"))
      .def("delete_file", &fs::FileSystem::delete_file, py::arg("id"))
      .def("truncate_file", &fs::FileSystem::truncate_file, py::arg("id"), py::arg("size"))
      .def("garbage_collect", &fs::FileSystem::garbage_collect, py::arg("mode"))
      .def("free_space", &fs::FileSystem::free_space)
      .def("user_free_chunks", &fs::FileSystem::user_free_chunks)
      .def("exists", &fs::FileSystem::exists)
      .def("find", &fs::FileSystem::find)
      .def("file_ids", &fs::FileSystem::file_ids)
      .def("file_size", [](const fs::FileSystem& f, ObjectId id) { return f.file(id).size_bytes; })
      .def_property("zero_overwrite", &fs::FileSystem::zero_overwrite, &fs::FileSystem::set_zero_overwrite)
      .def_property("now", &fs::FileSystem::now, &fs::FileSystem::set_time)
      .def("allocations", &fs::FileSystem::allocations)
      .def_property_readonly("medium", &fs::FileSystem::medium, py::return_value_policy::reference_internal);

  // ---- secure deletion
  py::class_<secdel::PurgeReport>(m, "PurgeReport")
      .def_readonly("blocks_erased", &secdel::PurgeReport::blocks_erased)
      .def_readonly("chunks_written", &secdel::PurgeReport::chunks_written)
      .def_readonly("duration_ticks", &secdel::PurgeReport::duration_ticks);

  m.def(
      "purge",
      [](fs::FileSystem& f, std::uint64_t seed, Ticks ticks_per_block) {
        return secdel::purge(f, {seed, ticks_per_block});
      },
      py::arg("fs"), py::arg("seed") = 0, py::arg("ticks_per_block") = 0);
  m.def("set_zero_overwrite", &secdel::set_zero_overwrite, py::arg("fs"), py::arg("enabled"));

  py::class_<secdel::BallooningConfig>(m, "BallooningConfig")
      .def(py::init([](std::uint64_t upper, std::uint64_t lower, std::uint32_t junk_blocks, double min_free,
                       std::optional<Ticks> age) {
             secdel::BallooningConfig c{upper, lower, junk_blocks, min_free, age};
             c.validate();
             return c;
           }),
           py::arg("upper_threshold_chunks"), py::arg("lower_threshold_chunks"), py::arg("junk_file_blocks") = 1,
           py::arg("min_free_fraction") = 0.05, py::arg("rotation_age_limit") = std::nullopt)
      .def_static("for_target", &secdel::BallooningConfig::for_target, py::arg("free_blocks_target"),
                  py::arg("junk_file_blocks"), py::arg("chunks_per_block"), py::arg("min_free_fraction") = 0.05)
      .def_readonly("upper_threshold_chunks", &secdel::BallooningConfig::upper_threshold_chunks)
      .def_readonly("lower_threshold_chunks", &secdel::BallooningConfig::lower_threshold_chunks);

  py::enum_<secdel::BalloonAction>(m, "BalloonAction")
      .value("None_", secdel::BalloonAction::None)
      .value("Created", secdel::BalloonAction::Created)
      .value("Deleted", secdel::BalloonAction::Deleted)
      .value("Refreshed", secdel::BalloonAction::Refreshed);

  py::class_<secdel::BallooningAgent>(m, "BallooningAgent")
      .def(py::init<fs::FileSystem&, secdel::BallooningConfig, std::uint64_t>(), py::arg("fs"), py::arg("config"),
           py::arg("seed") = 0, py::keep_alive<1, 2>())
      .def(
          "step",
          [](secdel::BallooningAgent& a, Ticks now) {
            const auto r = a.step(now);
            return py::make_tuple(r.action, r.count);
          },
          py::arg("now"))
      .def("pool_size", [](const secdel::BallooningAgent& a) { return a.pool().size(); })
      .def("observed_free", &secdel::BallooningAgent::observed_free);

  // ---- metrics
  m.def("nearest_rank", [](std::vector<double> v, unsigned p) {
    std::sort(v.begin(), v.end());
    return metrics::nearest_rank(v, p);
  });
  m.def(
      "deletion_latency",
      [](const std::vector<std::pair<Ticks, std::optional<Ticks>>>& deleted_erased) {
        std::vector<metrics::SecretRecord> rs;
        for (const auto& [t1, t2] : deleted_erased) {
          metrics::SecretRecord r;
          r.t_written = t1;
          r.t_deleted = t1;
          r.t_erased = t2;
          r.censored = !t2;
          rs.push_back(r);
        }
        const auto s = metrics::deletion_latency(rs);
        py::dict out;
        out["n_secrets"] = s.n_secrets;
        out["n_censored"] = s.n_censored;
        out["mean"] = s.mean;
        if (s.percentiles)
          for (std::size_t i = 0; i < metrics::kReportedPercentiles.size(); ++i)
            out[py::str("p" + std::to_string(metrics::kReportedPercentiles[i]))] = (*s.percentiles)[i];
        return out;
      },
      py::arg("deleted_erased"), "Latency summary (hours) from (t_deleted, t_erased or None) pairs in ticks.");
  m.def(
      "allocation_rate",
      [](const std::vector<Ticks>& times, Ticks start, Ticks end) {
        std::vector<metrics::AllocationRecord> rs(times.size());
        for (std::size_t i = 0; i < times.size(); ++i) rs[i].time_ticks = times[i];
        return metrics::allocation_rate(rs, {start, end});
      },
      py::arg("times"), py::arg("start"), py::arg("end"));
  m.def("expected_lifetime", py::overload_cast<double, std::uint64_t, std::uint64_t>(&metrics::expected_lifetime),
        py::arg("allocs_per_hour"), py::arg("block_count"), py::arg("erasure_limit"));
  m.def(
      "confidence_interval",
      [](const std::vector<double>& v, double level) {
        const auto ci = metrics::confidence_interval(v, level);
        return py::make_tuple(ci.mean, ci.half_width);
      },
      py::arg("values"), py::arg("level") = 0.95);
  m.def(
      "rank_correlation",
      [](const std::vector<double>& x, const std::vector<double>& y) { return metrics::rank_correlation(x, y); },
      py::arg("x"), py::arg("y"));

  // ---- workload
  py::class_<workload::WorkloadProfile>(m, "WorkloadProfile")
      .def_readonly("name", &workload::WorkloadProfile::name)
      .def("serialize", [](const workload::WorkloadProfile& p) { return workload::serialize_profile(p); });
  m.def("load_profile", &workload::load_profile, py::arg("document"));
  m.def("load_profile_file", &workload::load_profile_file, py::arg("path"));

  m.def(
      "run_simulation",
      [](const workload::WorkloadProfile& profile, nand::MediumGeometry geometry, const std::string& mechanism,
         double hours, double warmup_hours, std::uint64_t seed, std::optional<std::uint64_t> free_blocks_target,
         std::uint32_t reserve_blocks) {
        workload::SimulationConfig cfg;
        cfg.geometry = geometry;
        cfg.fs.reserve_blocks = reserve_blocks;
        cfg.mechanism = workload::parse_mechanism(mechanism);
        cfg.seed = seed;
        cfg.duration_ticks = static_cast<Ticks>(hours * kTicksPerHour);
        cfg.warmup_ticks = static_cast<Ticks>(warmup_hours * kTicksPerHour);
        cfg.record_chunk_writes = false;
        if (cfg.mechanism == workload::Mechanism::Ballooning) {
          if (!free_blocks_target) throw Error(Errc::InvalidConfig, "ballooning needs free_blocks_target");
          cfg.ballooning = secdel::BallooningConfig::for_target(*free_blocks_target, 1, geometry.chunks_per_block);
        }
        if (cfg.mechanism == workload::Mechanism::Purge) cfg.purge.after_secret_delete = true;
        cfg.validate();
        workload::RunResult r;
        {
          py::gil_scoped_release release;
          r = workload::run_simulation(profile, cfg);
        }
        const metrics::Window window{r.warmup_ticks, r.duration_ticks};
        py::dict out;
        out["allocations"] = r.allocations.size();
        out["allocs_per_hour"] = r.duration_ticks > r.warmup_ticks
                                     ? py::cast(metrics::allocation_rate(r.allocations, window))
                                     : py::none();
        std::vector<std::pair<std::optional<Ticks>, std::optional<Ticks>>> secrets;
        for (const auto& s : r.secrets) secrets.emplace_back(s.t_deleted, s.t_erased);
        out["secrets"] = secrets;
        out["total_erasures"] = r.wear.total_erasures;
        out["free_chunks"] = r.final_free.free_chunks;
        return out;
      },
      py::arg("profile"), py::arg("geometry"), py::arg("mechanism") = "none", py::arg("hours") = 6.0,
      py::arg("warmup_hours") = 1.0, py::arg("seed") = 1, py::arg("free_blocks_target") = std::nullopt,
      py::arg("reserve_blocks") = 5,
      "Runs one simulation and returns a summary dict; times in ticks (seconds).");
}
