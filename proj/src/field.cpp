#include "stringlab/field.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "stringlab/error.hpp"

namespace stringlab {

namespace {

static_assert(std::endian::native == std::endian::little, "field binaries assume a little-endian host");

void write_rows(std::span<const double> data, int n_space, int n_time, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::vector<double> row(static_cast<std::size_t>(n_time));
  for (int i = 0; i < n_space; ++i) {
    for (int t = 0; t < n_time; ++t) row[static_cast<std::size_t>(t)] = data[static_cast<std::size_t>(t) * n_space + i];
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
  if (!out) throw Error(ErrorKind::IoError, "short write to " + path.string());
}

std::filesystem::path with_suffix(const std::filesystem::path& base, const char* suffix) {
  return base.parent_path() / (base.filename().string() + suffix);
}

}  // namespace

void to_json(nlohmann::json& j, const SimGrid& g) {
  j = nlohmann::json{{"nx", g.nx}, {"dx", g.dx}, {"dt", g.dt}, {"nt", g.nt}, {"oversample", g.oversample}};
}

std::vector<double> FieldTrajectory::row(int i) const {
  std::vector<double> out(static_cast<std::size_t>(n_time));
  for (int t = 0; t < n_time; ++t) out[static_cast<std::size_t>(t)] = at(i, t);
  return out;
}

void write_field_binary(const FieldTrajectory& field, const std::filesystem::path& base) {
  nlohmann::json header{{"rows", field.n_space},
                        {"cols", field.n_time},
                        {"dtype", "float64"},
                        {"endianness", "little"},
                        {"layout", "row-major; rows = space, cols = time"},
                        {"sample_rate", field.sample_rate},
                        {"length", field.length},
                        {"x_first", -0.5 * field.length},
                        {"x_last", 0.5 * field.length},
                        {"data", with_suffix(base, ".bin").filename().string()},
                        {"params", field.params}};
  if (field.grid) header["grid"] = *field.grid;
  if (field.pluck) header["pluck"] = *field.pluck;
  write_rows(field.u, field.n_space, field.n_time, with_suffix(base, ".bin"));
  if (field.zeta) {
    header["zeta_data"] = with_suffix(base, "_zeta.bin").filename().string();
    write_rows(*field.zeta, field.n_space, field.n_time, with_suffix(base, "_zeta.bin"));
  }
  std::ofstream out(with_suffix(base, ".json"));
  if (!out) throw Error(ErrorKind::IoError, "cannot open header for " + base.string());
  out << header.dump(2) << '\n';
}

FieldTrajectory read_field_binary(const std::filesystem::path& base) {
  std::ifstream hin(with_suffix(base, ".json"));
  if (!hin) throw Error(ErrorKind::IoError, "cannot open header for " + base.string());
  nlohmann::json header;
  try {
    hin >> header;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::FormatError, e.what());
  }
  FieldTrajectory f;
  f.n_space = header.at("rows").get<int>();
  f.n_time = header.at("cols").get<int>();
  f.sample_rate = header.at("sample_rate").get<double>();
  f.length = header.at("length").get<double>();
  header.at("params").get_to(f.params);
  if (header.contains("pluck")) f.pluck = header.at("pluck").get<PluckProfile>();

  std::ifstream in(with_suffix(base, ".bin"), std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open field data for " + base.string());
  f.u.assign(static_cast<std::size_t>(f.n_space) * f.n_time, 0.0);
  std::vector<double> row(static_cast<std::size_t>(f.n_time));
  for (int i = 0; i < f.n_space; ++i) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(double)));
    if (!in) throw Error(ErrorKind::FormatError, "field data shorter than header claims");
    for (int t = 0; t < f.n_time; ++t) f.u[static_cast<std::size_t>(t) * f.n_space + i] = row[static_cast<std::size_t>(t)];
  }
  return f;
}

void write_field_csv(const FieldTrajectory& field, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  out.precision(17);
  for (int i = 0; i < field.n_space; ++i) {
    out << field.position(i);
    for (int t = 0; t < field.n_time; ++t) out << ',' << field.at(i, t);
    out << '\n';
  }
}

}  // namespace stringlab
