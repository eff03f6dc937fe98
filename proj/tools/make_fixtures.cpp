// Regenerates the files under data/ from the built-in fixture models.
// Usage: causex_fixtures [DATA_DIR]
#include <filesystem>
#include <fstream>
#include <iostream>

#include "causex/data.hpp"
#include "causex/fixtures.hpp"
#include "causex/oracle.hpp"
#include "causex/service.hpp"

using namespace causex;

namespace {

void write(const std::filesystem::path& p, const std::string& s) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p) << s;
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path dir = argc > 1 ? argv[1] : "data";
  const Scm f = fixtures::f1();
  write(dir / "f1/graph.json", graph_to_json(f.graph()).dump(2) + "\n");
  write(dir / "f1/scm.json", scm_to_json(f).dump(2) + "\n");
  write(dir / "f1/data.csv", to_csv(exhaustive_joint(f)));
  write(dir / "f1/sample.csv", to_csv(sample_dataset(f, 2000, 11), false));
  write(dir / "f1/model.json", R"({
  "kind": "expr",
  "output": "O",
  "inputs": ["Z", "X"],
  "expr": "if X == 1 or Z == 1 then 1 else 0"
}
)");

  // First small instance whose optimal plan changes at least two attributes.
  fixtures::RecourseInstanceOptions o;
  o.max_attributes = 3;
  o.max_domain = 4;
  o.noise_levels = 32;
  for (std::uint64_t seed = 1; seed < 50; ++seed) {
    const auto r = fixtures::recourse_instance(seed, o);
    if (r.config.actionable.size() < 2) continue;
    const Schema& s = r.scm.schema();
    nlohmann::json spec = {{"graph", graph_to_json(r.scm.graph())}, {"dataset", {{"csv", to_csv(exhaustive_joint(r.scm))}}}};
    nlohmann::ordered_json ind, cfg;
    for (std::size_t v = 0; v < s.size(); ++v) ind[s[v].name] = s[v].domain[static_cast<std::size_t>(r.individual[v])];
    cfg["actionable"] = r.config.actionable;
    cfg["alpha"] = r.config.alpha;
    cfg["costs"] = r.config.costs;
    const auto session = service::load_session(spec);
    const auto plan = service::handle_recourse(*session, {{"individual", ind}, {"config", cfg}});
    if (!plan["feasible"].get<bool>() || plan["changes"].size() < 2) continue;
    write(dir / "loan/graph.json", graph_to_json(r.scm.graph()).dump(2) + "\n");
    write(dir / "loan/data.csv", to_csv(exhaustive_joint(r.scm)));
    write(dir / "loan/recourse.json", cfg.dump(2) + "\n");
    write(dir / "loan/individual.json", ind.dump(2) + "\n");
    nlohmann::ordered_json request;
    request["individual"] = ind;
    request["config"] = cfg;
    write(dir / "loan/request.json", request.dump(2) + "\n");
    std::cout << "loan instance: seed " << seed << "\n";
    return 0;
  }
  std::cerr << "no suitable recourse instance found\n";
  return 1;
}
