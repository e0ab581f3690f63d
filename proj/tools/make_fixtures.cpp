// Writes the synthetic demo fixture set: make_fixtures DIR [SEED]
#include <cstdlib>
#include <iostream>

#include "printacc/synthetic.hpp"

int main(int argc, char** argv)
{
    if (argc < 2 || argc > 3) {
        std::cerr << "usage: make_fixtures DIR [SEED]\n";
        return 64;
    }
    const std::uint64_t seed = argc == 3 ? std::strtoull(argv[2], nullptr, 10) : printacc::kDefaultSeed;
    for (const auto& p : printacc::write_fixture_set(argv[1], seed))
        std::cout << p.string() << "\n";
    return 0;
}
