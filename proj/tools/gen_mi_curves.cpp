// Regenerates the bundled link-abstraction data files.
//   gen_mi_curves <out_dir>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "v2xslice/link_abstraction.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: %s <out_dir>\n", argv[0]);
    return 1;
  }
  const std::filesystem::path dir(argv[1]);
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "mcs_table_v1.csv");
    v2x::McsTable::builtin().write(out);
  }
  {
    std::ofstream out(dir / "mi_curves_v1.csv");
    v2x::MiCurves::compute().write(out);
  }
  return 0;
}
