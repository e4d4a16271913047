#include "msgchain/cli.hpp"

int main(int argc, char** argv)
{
    return msgchain::run_cli(argc, argv);
}
