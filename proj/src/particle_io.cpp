#include "treefmm/particle_io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string_view>

namespace treefmm {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_field(std::string_view field, std::size_t line_no) {
  field = trim(field);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw std::runtime_error("bad number on line " + std::to_string(line_no) + ": '" + std::string(field) + "'");
  return value;
}

}  // namespace

ParticleSet read_particles_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("missing CSV header");
  std::string_view header = trim(line);
  if (header != "x,y,z,q") throw std::runtime_error("expected CSV header 'x,y,z,q'");

  ParticleSet ps;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view rest = trim(line);
    if (rest.empty()) continue;
    std::array<double, 4> v{};
    for (std::size_t k = 0; k < 4; ++k) {
      const auto comma = rest.find(',');
      if ((k < 3) == (comma == std::string_view::npos))
        throw std::runtime_error("expected 4 fields on line " + std::to_string(line_no));
      v[k] = parse_field(rest.substr(0, comma), line_no);
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    }
    ps.push_back(v[0], v[1], v[2], v[3]);
  }
  return ps;
}

ParticleSet load_particles_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_particles_csv(in);
}

void write_particles_csv(std::ostream& out, const ParticleSet& ps) {
  const auto old = out.precision(std::numeric_limits<double>::max_digits10);
  out << "x,y,z,q\n";
  for (std::size_t i = 0; i < ps.size(); ++i)
    out << ps.x[i] << ',' << ps.y[i] << ',' << ps.z[i] << ',' << ps.q[i] << '\n';
  out.precision(old);
}

void save_particles_csv(const std::string& path, const ParticleSet& ps) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_particles_csv(out, ps);
}

}  // namespace treefmm
