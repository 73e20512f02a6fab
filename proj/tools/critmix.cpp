#include "critmix/cli.hpp"

int main(int argc, char** argv)
{
    return critmix::cli_main(argc, argv);
}
