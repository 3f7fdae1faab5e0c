// placeholder while the core is brought up; replaced by the real CLI
int main() { return 0; }
