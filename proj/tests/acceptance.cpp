// Acceptance suite: runs the quantitative checks behind the construction and
// prints one pass/fail line per criterion. Exit code 0 iff everything passed.
//
//   acceptance                 run all criteria
//   acceptance --criterion 5   run a subset (repeatable / comma lists)

#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "cnls/config.hpp"
#include "cnls/verify.hpp"

int main(int argc, char** argv) {
    std::vector<int> subset;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
            std::string arg = argv[++i];
            std::size_t pos = 0;
            while (pos < arg.size()) {
                const auto comma = arg.find(',', pos);
                const auto tok = arg.substr(pos, comma == std::string::npos ? arg.npos : comma - pos);
                if (!tok.empty()) subset.push_back(std::stoi(tok));
                if (comma == std::string::npos) break;
                pos = comma + 1;
            }
        } else {
            std::fprintf(stderr, "usage: acceptance [--criterion n[,m...]]\n");
            return 2;
        }
    }

    const auto cfg = cnls::driver::RunConfig::defaults(2);
    const auto results = cnls::driver::verify_suite(cfg, subset);
    cnls::driver::print_verify_table(results);
    return cnls::driver::verify_exit_code(results);
}
