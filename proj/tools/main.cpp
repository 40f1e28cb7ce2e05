#include "app.hpp"

int main(int argc, char** argv) { return psdoflow::app::main_cli(argc, argv); }
