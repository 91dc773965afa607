#include "gravduct/io.hpp"

#include <cstdio>
#include <fstream>

#include "gravduct/errors.hpp"

namespace gravduct {

namespace {

std::ofstream open(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorClass::config, "cannot write '" + path + "'");
  return out;
}

// Shortest text that round-trips, independent of stream state.
std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_field_csv(const std::string& path, const ScalarField& field) {
  auto out = open(path);
  const Grid& g = field.grid();
  out << "x1,x2,value\n";
  for (int i = 0; i <= g.n1; ++i)
    for (int j = 0; j <= g.n2; ++j)
      out << num(g.x1(i)) << ',' << num(g.x2(j)) << ',' << num(field(i, j)) << '\n';
}

void write_fields_csv(const std::string& path, const std::vector<const ScalarField*>& fields) {
  if (fields.empty()) return;
  auto out = open(path);
  const Grid& g = fields.front()->grid();
  out << "x1,x2";
  for (const auto* f : fields) out << ',' << f->name();
  out << '\n';
  for (int i = 0; i <= g.n1; ++i) {
    for (int j = 0; j <= g.n2; ++j) {
      out << num(g.x1(i)) << ',' << num(g.x2(j));
      for (const auto* f : fields) out << ',' << num((*f)(i, j));
      out << '\n';
    }
  }
}

void write_background_csv(const std::string& path, const BackgroundSolution& bg) {
  auto out = open(path);
  out << "x1,rho,u,p,G,Phi0\n";
  for (std::size_t k = 0; k < bg.size(); ++k) {
    out << num(bg.x1()[k]) << ',' << num(bg.rho()[k]) << ',' << num(bg.u()[k]) << ','
        << num(bg.p()[k]) << ',' << num(bg.G()[k]) << ',' << num(bg.Phi0()[k]) << '\n';
  }
}

void write_phase_csv(const std::string& path, const std::vector<PhasePoint>& points) {
  auto out = open(path);
  out << "rho,G,level\n";
  for (const auto& p : points) out << num(p.rho) << ',' << num(p.G) << ',' << num(p.level) << '\n';
}

void write_iteration_log(const std::string& path, const IterationLog& log) {
  auto out = open(path);
  out << "# iteration difference sup_phi sup_Psi min_psi_x2 relaxation\n";
  for (const auto& r : log.records) {
    out << r.iteration << ' ' << num(r.difference) << ' ' << num(r.sup_phi) << ' ' << num(r.sup_Psi)
        << ' ' << num(r.min_psi_x2) << ' ' << num(r.relaxation) << '\n';
  }
  out << "# converged " << (log.converged ? "yes" : "no") << " fixed_point_defect "
      << num(log.fixed_point_defect) << '\n';
}

void write_json(const std::string& path, const nlohmann::json& doc) {
  auto out = open(path);
  out << doc.dump(2) << '\n';
}

nlohmann::json grid_json(const Grid& grid) {
  return {{"L", grid.L}, {"n1", grid.n1}, {"n2", grid.n2}, {"h1", grid.h1()}, {"h2", grid.h2()}};
}

nlohmann::json residuals_json(const ResidualReport& r) {
  return {{"mass", r.mass},
          {"momentum_y", r.momentum_y},
          {"entropy_transport", r.entropy},
          {"pseudo_bernoulli_transport", r.pseudo_bernoulli},
          {"poisson", r.poisson},
          {"momentum_x", r.momentum_x},
          {"energy", r.energy},
          {"pseudo_bernoulli_sup", r.K_sup}};
}

nlohmann::json iteration_json(const IterationLog& log) {
  nlohmann::json diffs = nlohmann::json::array();
  for (const auto& r : log.records) diffs.push_back(r.difference);
  return {{"iterations", log.records.size()},
          {"converged", log.converged},
          {"differences", diffs},
          {"fixed_point_defect", log.fixed_point_defect}};
}

}  // namespace gravduct
