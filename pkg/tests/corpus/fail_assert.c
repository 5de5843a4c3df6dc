extern int __VERIFIER_nondet_int(void);

int main() {
  int x = __VERIFIER_nondet_int();
  int y = x + 1;
  assert(y != 3);
  return 0;
}
