extern int __VERIFIER_nondet_int(void);
extern void __VERIFIER_assume(int cond);

int g = 0;

void div(int d) {
  g = g + 1;
  while (g >= d) {
    g = g - d;
  }
}

int main() {
  g = __VERIFIER_nondet_int();
  int d = __VERIFIER_nondet_int();
  __VERIFIER_assume(d > 0);
  int x = g;
  div(d);
  assert(g < x);
  return 0;
}
