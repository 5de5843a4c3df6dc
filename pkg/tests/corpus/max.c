extern int __VERIFIER_nondet_int(void);

int max(int a, int b) {
  if (a > b)
    return a;
  return b;
}

int main() {
  int x = __VERIFIER_nondet_int();
  int y = __VERIFIER_nondet_int();
  int m = max(x, y);
  assert(m >= x && m >= y);
  return 0;
}
