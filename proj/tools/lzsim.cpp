#include "app.hpp"

int main(int argc, char** argv) { return lzsim::run(argc, argv); }
